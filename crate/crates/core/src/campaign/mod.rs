//! Fuzzing campaigns: engine process management, crash triage and
//! confirmation of the oracle's prediction.

mod classify;
mod confirm;
mod engine;
mod report;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cwe::Cwe;
use crate::toolchain::CommandTemplate;

pub use classify::classify_crash;
pub use confirm::{confirm_verdict, Confirmation, ConfirmationOutcome, UNCONFIRMED_NOTE};
pub use engine::{load_crash_index, replay_crash, run_campaign, CampaignRequest, CRASH_INDEX};
pub use report::{dedupe_crashes, dedupe_key, extract_report};

pub const DEFAULT_ENGINE_COMMAND: &str = "{binary} -max_total_time={max_time} -rss_limit_mb={rss_limit} \
     -max_len={max_len} -artifact_prefix={artifact_dir}/ -print_final_stats=1 {corpus_dir} {seed_dir}";

/// libFuzzer reads `-max_len=0` as "guess from the corpus" (about 4 KiB), so
/// an unlimited input length is passed as this cap instead.
pub const UNLIMITED_MAX_LEN: u64 = 1 << 20;

/// The length limit used when nothing asks for unlimited inputs.
pub const DEFAULT_MAX_LEN: u64 = 4096;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid campaign configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub time_budget_seconds: u64,
    pub memory_limit_mb: u64,
    pub seed_corpus_dir: Option<PathBuf>,
    /// Variables: `{binary}`, `{corpus_dir}`, `{max_time}`, `{rss_limit}`,
    /// `{max_len}`, `{artifact_dir}`, `{seed_dir}`.
    pub engine_command: CommandTemplate,
    /// `Some(0)` is unlimited. `None` picks unlimited for size-sensitive
    /// predicted CWEs and [`DEFAULT_MAX_LEN`] otherwise.
    pub max_input_len: Option<u64>,
    /// Engine restarts stop after this many crashes.
    pub max_crashes: usize,
    pub grace_seconds: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            time_budget_seconds: 300,
            memory_limit_mb: 2048,
            seed_corpus_dir: None,
            engine_command: CommandTemplate::new(DEFAULT_ENGINE_COMMAND),
            max_input_len: None,
            max_crashes: 10,
            grace_seconds: 10,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), CampaignError> {
        if self.time_budget_seconds < 1 {
            return Err(CampaignError::InvalidConfig(
                "time_budget_seconds must be at least 1".into(),
            ));
        }
        if self.memory_limit_mb < 1 {
            return Err(CampaignError::InvalidConfig(
                "memory_limit_mb must be at least 1".into(),
            ));
        }
        if self.grace_seconds < 2 {
            return Err(CampaignError::InvalidConfig("grace_seconds must be at least 2".into()));
        }
        if self.max_crashes < 1 {
            return Err(CampaignError::InvalidConfig("max_crashes must be at least 1".into()));
        }
        Ok(())
    }

    /// The configured length limit, 0 meaning unlimited.
    pub fn effective_max_len(&self, predicted: &[Cwe]) -> u64 {
        match self.max_input_len {
            Some(n) => n,
            None if predicted.iter().any(|c| c.is_size_sensitive()) => 0,
            None => DEFAULT_MAX_LEN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrashKind {
    DoubleFree,
    UseAfterFree,
    HeapBufferOverflow,
    StackBufferOverflow,
    NullDeref,
    MemoryLeak,
    Ubsan,
    Unknown,
}

mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        STANDARD.decode(text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashRecord {
    #[serde(with = "base64_bytes")]
    pub input_bytes: Vec<u8>,
    pub sanitizer_report: String,
    pub dedupe_key: String,
    pub classified_cwe: Option<Cwe>,
    pub crash_kind: CrashKind,
    /// Stored input, relative to the target's work directory.
    #[serde(default)]
    pub artifact: Option<PathBuf>,
}

impl CrashRecord {
    /// Builds a record whose key and classification derive from `report`.
    pub fn from_report(input_bytes: Vec<u8>, report: String) -> Self {
        let (crash_kind, classified_cwe) = classify_crash(&report);
        CrashRecord {
            dedupe_key: dedupe_key(&report),
            input_bytes,
            sanitizer_report: report,
            classified_cwe,
            crash_kind,
            artifact: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignStatus {
    CrashFound,
    BudgetExhaustedNoCrash,
    EngineError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub target_function: String,
    /// Deduplicated, in discovery order.
    pub crashes: Vec<CrashRecord>,
    pub final_coverage_fraction: f64,
    pub executions: u64,
    pub status: CampaignStatus,
    /// Raw crashes seen before deduplication.
    pub raw_crash_count: usize,
    pub engine_runs: u32,
    pub duration_seconds: f64,
    /// Effective length limit passed to the engine, 0 meaning unlimited.
    pub max_input_len: u64,
    #[serde(default)]
    pub engine_error: Option<String>,
}

impl CampaignResult {
    pub fn check_invariants(&self) -> Result<(), String> {
        if (self.status == CampaignStatus::CrashFound) != !self.crashes.is_empty() {
            return Err(format!("status {:?} with {} crashes", self.status, self.crashes.len()));
        }
        if !(0.0..=1.0).contains(&self.final_coverage_fraction) {
            return Err(format!("coverage {} outside [0,1]", self.final_coverage_fraction));
        }
        Ok(())
    }
}

//! Harness admission: a candidate must compile, survive trivial inputs and
//! reach enough of its target function.

mod build;
mod coverage;
mod smoke;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::inventory::FunctionRecord;
use crate::synthesis::{DriverCandidate, Provenance};

pub use build::{compile_candidate, BuildConfig, CompileError, Compiled, DEFAULT_COMPILER_COMMAND};
pub use coverage::{
    fraction_for, measure_coverage, measure_coverage_dir, measure_coverage_or_zero, parse_coverage_dump,
    FunctionCoverage,
};
pub use smoke::{is_sanitizer_report, smoke_run, SmokeReport};

#[derive(Debug, Error)]
pub enum GateError {
    #[error("toolchain missing: {0}")]
    ToolchainMissing(String),
    #[error("invalid build configuration: {0}")]
    InvalidConfig(String),
    #[error("coverage unavailable: {0}")]
    CoverageUnavailable(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmokeOutcome {
    Pass,
    CrashOnEmpty,
    ImmediateExitFailure,
    Timeout,
    NotRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateVerdict {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateStage {
    Compile,
    Execute,
    Coverage,
}

/// Identifies the gated candidate without embedding its source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRef {
    pub target_function: String,
    pub attempt: u32,
    pub provenance: Provenance,
    pub source_sha256: String,
}

impl From<&DriverCandidate> for CandidateRef {
    fn from(c: &DriverCandidate) -> Self {
        CandidateRef {
            target_function: c.target_function.clone(),
            attempt: c.attempt,
            provenance: c.provenance,
            source_sha256: hex::encode(Sha256::digest(c.source_text.as_bytes())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub candidate: CandidateRef,
    pub compiled: bool,
    pub compile_diagnostics: String,
    pub smoke_run: SmokeOutcome,
    /// Sanitizer report or stderr excerpt of the failing smoke run.
    #[serde(default)]
    pub smoke_detail: String,
    pub coverage_fraction: f64,
    pub coverage_threshold: f64,
    pub verdict: GateVerdict,
    pub rejected_stage: Option<GateStage>,
    /// The harness binary, when compilation succeeded.
    #[serde(default)]
    pub binary: Option<PathBuf>,
}

impl GateReport {
    pub fn accepted(&self) -> bool {
        self.verdict == GateVerdict::Accepted
    }

    /// Cross-field consistency between the verdict and the sub-results.
    pub fn check_invariants(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.coverage_fraction) {
            return Err(format!("coverage {} outside [0,1]", self.coverage_fraction));
        }
        let first_failure = if !self.compiled {
            Some(GateStage::Compile)
        } else if self.smoke_run != SmokeOutcome::Pass {
            Some(GateStage::Execute)
        } else if self.coverage_fraction < self.coverage_threshold {
            Some(GateStage::Coverage)
        } else {
            None
        };
        match (self.verdict, self.rejected_stage, first_failure) {
            (GateVerdict::Accepted, None, None) => Ok(()),
            (GateVerdict::Rejected, Some(s), Some(f)) if s == f => {
                if s == GateStage::Compile && self.smoke_run != SmokeOutcome::NotRun {
                    return Err("smoke run recorded after a compile failure".into());
                }
                Ok(())
            }
            (v, s, f) => Err(format!(
                "verdict {v:?} / rejected_stage {s:?} but first failing stage is {f:?}"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    pub build: BuildConfig,
    /// Minimum covered fraction of the target's lines.
    pub coverage_threshold: f64,
    /// Smoke and coverage inputs; `None` uses [`default_seeds`].
    pub seeds: Option<Vec<Vec<u8>>>,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            build: BuildConfig::default(),
            coverage_threshold: 0.1,
            seeds: None,
        }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<(), GateError> {
        self.build.validate()?;
        if !(0.0..=1.0).contains(&self.coverage_threshold) {
            return Err(GateError::InvalidConfig(format!(
                "coverage_threshold {} outside [0,1]",
                self.coverage_threshold
            )));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<Vec<u8>> {
        self.seeds.clone().unwrap_or_else(default_seeds)
    }
}

/// Empty input, one byte, and 4 KiB of 0xFF.
pub fn default_seeds() -> Vec<Vec<u8>> {
    vec![Vec::new(), vec![0x00], vec![0xFF; 4096]]
}

pub(crate) fn write_seeds(dir: &Path, seeds: &[Vec<u8>]) -> Result<Vec<PathBuf>, GateError> {
    std::fs::create_dir_all(dir).map_err(|e| GateError::Io(dir.to_path_buf(), e))?;
    seeds
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = dir.join(format!("seed-{i}"));
            std::fs::write(&p, s).map_err(|e| GateError::Io(p.clone(), e))?;
            Ok(p)
        })
        .collect()
}

/// Applies the three admission conditions in order, stopping at the first
/// failure. Only a missing toolchain is an error.
pub fn gate(
    candidate: &DriverCandidate,
    config: &GateConfig,
    target: &FunctionRecord,
    work_dir: &Path,
) -> Result<GateReport, GateError> {
    config.validate()?;
    let mut report = GateReport {
        candidate: CandidateRef::from(candidate),
        compiled: false,
        compile_diagnostics: String::new(),
        smoke_run: SmokeOutcome::NotRun,
        smoke_detail: String::new(),
        coverage_fraction: 0.0,
        coverage_threshold: config.coverage_threshold,
        verdict: GateVerdict::Rejected,
        rejected_stage: None,
        binary: None,
    };

    let compiled = match compile_candidate(candidate, &config.build, work_dir) {
        Ok(c) => c,
        Err(CompileError::Failed(diagnostics)) => {
            report.compile_diagnostics = diagnostics;
            report.rejected_stage = Some(GateStage::Compile);
            return Ok(report);
        }
        Err(CompileError::Gate(e)) => return Err(e),
    };
    report.compiled = true;
    report.compile_diagnostics = compiled.diagnostics;
    report.binary = Some(compiled.binary.clone());

    let seeds = config.seeds();
    let smoke = smoke_run(&compiled.binary, &seeds, &config.build, work_dir)?;
    report.smoke_run = smoke.outcome;
    report.smoke_detail = smoke.detail;
    if smoke.outcome != SmokeOutcome::Pass {
        report.rejected_stage = Some(GateStage::Execute);
        return Ok(report);
    }

    report.coverage_fraction = measure_coverage_or_zero(&compiled.binary, &seeds, target, &config.build, work_dir)?;
    if report.coverage_fraction < config.coverage_threshold {
        report.rejected_stage = Some(GateStage::Coverage);
        return Ok(report);
    }
    report.verdict = GateVerdict::Accepted;
    Ok(report)
}

//! Run report: per-target outcomes plus confirmation metrics.

mod markdown;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::campaign::{CampaignResult, Confirmation, ConfirmationOutcome};
use crate::gate::GateReport;
use crate::oracle::TargetCandidate;
use crate::synthesis::{GenerationSession, Provenance, SessionStatus};

pub use markdown::render_markdown;

pub const SCHEMA_VERSION: &str = "1";

/// Timestamp written in place of the real ones by [`PipelineReport::normalized`].
pub const NORMALIZED_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub flagged_count: usize,
    pub confirmed_matching: usize,
    pub confirmed_other: usize,
    pub unconfirmed: usize,
    /// Any crash counts as confirmation. `None` when nothing was flagged.
    pub oracle_precision: Option<f64>,
    /// Only crashes of a predicted CWE count.
    pub precision_matching: Option<f64>,
    pub gate_acceptance_rate: f64,
}

impl MetricsSummary {
    pub fn check_invariants(&self) -> Result<(), String> {
        let sum = self.confirmed_matching + self.confirmed_other + self.unconfirmed;
        if sum != self.flagged_count {
            return Err(format!("categories sum to {sum}, flagged {}", self.flagged_count));
        }
        if self.oracle_precision.is_some() != (self.flagged_count > 0)
            || self.precision_matching.is_some() != (self.flagged_count > 0)
        {
            return Err("precision defined iff something was flagged".into());
        }
        for p in [self.oracle_precision, self.precision_matching].into_iter().flatten() {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("precision {p} outside [0,1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.gate_acceptance_rate) {
            return Err(format!(
                "gate acceptance rate {} outside [0,1]",
                self.gate_acceptance_rate
            ));
        }
        Ok(())
    }
}

/// Counts outcomes and derives both precision variants. The gate
/// acceptance rate is left at 0; see [`gate_acceptance_rate`].
pub fn compute_confirmation_metrics(confirmations: &[Confirmation]) -> MetricsSummary {
    let count = |o| confirmations.iter().filter(|c| c.outcome == o).count();
    let confirmed_matching = count(ConfirmationOutcome::ConfirmedMatchingCwe);
    let confirmed_other = count(ConfirmationOutcome::ConfirmedOtherCrash);
    let unconfirmed = count(ConfirmationOutcome::Unconfirmed);
    let flagged_count = confirmations.len();
    let ratio = |n: usize| (flagged_count > 0).then(|| n as f64 / flagged_count as f64);
    MetricsSummary {
        flagged_count,
        confirmed_matching,
        confirmed_other,
        unconfirmed,
        oracle_precision: ratio(confirmed_matching + confirmed_other),
        precision_matching: ratio(confirmed_matching),
        gate_acceptance_rate: 0.0,
    }
}

/// Share of gated candidates that were accepted; 0 when none were gated.
pub fn gate_acceptance_rate<'a>(reports: impl IntoIterator<Item = &'a GateReport>) -> f64 {
    let (mut total, mut accepted) = (0usize, 0usize);
    for r in reports {
        total += 1;
        accepted += usize::from(r.accepted());
    }
    if total == 0 {
        0.0
    } else {
        accepted as f64 / total as f64
    }
}

/// What the synthesis loop did for one target, without the full prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub status: SessionStatus,
    pub attempts: u32,
    pub max_attempts: u32,
    pub accepted_attempt: Option<u32>,
    pub accepted_provenance: Option<Provenance>,
}

impl From<&GenerationSession> for SessionSummary {
    fn from(s: &GenerationSession) -> Self {
        let accepted = s
            .history
            .iter()
            .rev()
            .find(|r| r.gate.as_ref().is_some_and(GateReport::accepted));
        SessionSummary {
            status: s.status,
            attempts: s.history.len() as u32,
            max_attempts: s.max_attempts,
            accepted_attempt: accepted.map(|r| r.attempt),
            accepted_provenance: accepted.and_then(|r| r.candidate.as_ref()).map(|c| c.provenance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub target: TargetCandidate,
    pub session: SessionSummary,
    pub gate_reports: Vec<GateReport>,
    pub campaign: Option<CampaignResult>,
    pub confirmation: Confirmation,
    /// Set when processing this target failed; the run continued.
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema_version: String,
    pub run_id: String,
    /// Effective configuration of the run.
    pub config_snapshot: serde_json::Value,
    /// In rank order.
    pub targets: Vec<TargetReport>,
    pub started_at: String,
    pub ended_at: String,
    pub metrics: MetricsSummary,
}

/// Hex digest identifying a configuration.
pub fn run_id(config_snapshot: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(config_snapshot).expect("json values serialize");
    hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
}

impl PipelineReport {
    /// Assembles a report, ordering targets by rank and computing metrics.
    pub fn new(
        config_snapshot: serde_json::Value,
        mut targets: Vec<TargetReport>,
        started_at: String,
        ended_at: String,
    ) -> Self {
        targets.sort_by(|a, b| (a.target.rank, &a.target.record.name).cmp(&(b.target.rank, &b.target.record.name)));
        let confirmations: Vec<Confirmation> = targets.iter().map(|t| t.confirmation.clone()).collect();
        let mut metrics = compute_confirmation_metrics(&confirmations);
        metrics.gate_acceptance_rate = gate_acceptance_rate(targets.iter().flat_map(|t| &t.gate_reports));
        PipelineReport {
            schema_version: SCHEMA_VERSION.to_string(),
            run_id: run_id(&config_snapshot),
            config_snapshot,
            targets,
            started_at,
            ended_at,
            metrics,
        }
    }

    /// Copy with fixed timestamps, for comparing runs.
    pub fn normalized(&self) -> Self {
        PipelineReport {
            started_at: NORMALIZED_TIMESTAMP.into(),
            ended_at: NORMALIZED_TIMESTAMP.into(),
            ..self.clone()
        }
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        let mut names = BTreeSet::new();
        for t in &self.targets {
            if !names.insert(t.target.record.name.as_str()) {
                return Err(format!("{} listed twice", t.target.record.name));
            }
            if t.confirmation.target_function != t.target.record.name {
                return Err(format!(
                    "confirmation for {} filed under {}",
                    t.confirmation.target_function, t.target.record.name
                ));
            }
        }
        self.metrics.check_invariants()
    }

    pub fn outcome_of(&self, function: &str) -> Option<ConfirmationOutcome> {
        self.targets
            .iter()
            .find(|t| t.target.record.name == function)
            .map(|t| t.confirmation.outcome)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Markdown,
}

pub fn render_report(report: &PipelineReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => render_markdown(report),
    }
}

pub fn parse_report(json: &str) -> Result<PipelineReport, serde_json::Error> {
    serde_json::from_str(json)
}

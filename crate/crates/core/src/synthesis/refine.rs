use serde::{Deserialize, Serialize};

use super::prompt::build_prompt_attempt;
use super::{DriverCandidate, Prompt, PromptTemplate, SynthesisError};
use crate::campaign::CampaignResult;
use crate::gate::{GateReport, GateStage};
use crate::oracle::TargetCandidate;

pub const DEFAULT_MAX_ATTEMPTS: u32 = 5;

/// Added once a crash-free campaign ran against a target whose predicted
/// weakness tends to need large inputs.
pub const NO_SIZE_CAP: &str = "Do not impose any upper bound on input or allocation sizes in the harness.";

const DIAGNOSTIC_LINES: usize = 50;

/// Why the previous attempt did not confirm anything.
#[derive(Debug, Clone, Copy)]
pub enum Failure<'a> {
    Gate(&'a GateReport),
    Campaign(&'a CampaignResult),
    EmptyCompletion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    InProgress,
    /// A harness passed the gate.
    Accepted,
    /// Attempts ran out without an accepted harness or a crash.
    Exhausted,
    /// Synthesis could not proceed (no backend and no template route).
    Aborted,
}

/// One attempt: the prompt (absent for template drivers), the candidate it
/// produced, and the gate outcome once known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt: u32,
    pub prompt: Option<Prompt>,
    pub candidate: Option<DriverCandidate>,
    pub gate: Option<GateReport>,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSession {
    pub target: TargetCandidate,
    pub max_attempts: u32,
    pub temperature: f64,
    pub history: Vec<AttemptRecord>,
    pub status: SessionStatus,
}

impl GenerationSession {
    pub fn new(target: TargetCandidate, max_attempts: u32, temperature: f64) -> Self {
        GenerationSession {
            target,
            max_attempts: max_attempts.max(1),
            temperature,
            history: Vec::new(),
            status: SessionStatus::InProgress,
        }
    }

    pub fn next_attempt(&self) -> u32 {
        self.history.last().map_or(1, |r| r.attempt + 1)
    }

    pub fn attempts_left(&self) -> bool {
        self.next_attempt() <= self.max_attempts
    }

    /// Appends an attempt, keeping indices increasing and within the limit.
    pub fn record(&mut self, record: AttemptRecord) -> Result<(), SynthesisError> {
        if record.attempt < self.next_attempt() || record.attempt > self.max_attempts {
            return Err(SynthesisError::AttemptsExhausted {
                function: self.target.record.name.clone(),
                max_attempts: self.max_attempts,
            });
        }
        self.history.push(record);
        Ok(())
    }

    /// Latest gate report that accepted its candidate.
    pub fn accepted(&self) -> Option<(&DriverCandidate, &GateReport)> {
        self.history.iter().rev().find_map(|r| match (&r.candidate, &r.gate) {
            (Some(c), Some(g)) if g.accepted() => Some((c, g)),
            _ => None,
        })
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        if self.history.len() > self.max_attempts as usize {
            return Err(format!(
                "{} attempts recorded, limit {}",
                self.history.len(),
                self.max_attempts
            ));
        }
        let mut last = 0;
        for r in &self.history {
            if r.attempt <= last || r.attempt > self.max_attempts {
                return Err(format!("attempt index {} after {last}", r.attempt));
            }
            last = r.attempt;
        }
        Ok(())
    }
}

fn head(text: &str, lines: usize) -> String {
    text.lines().take(lines).collect::<Vec<_>>().join("\n")
}

fn failure_instructions(target: &TargetCandidate, failure: Failure<'_>) -> Option<String> {
    match failure {
        Failure::Gate(report) => match report.rejected_stage? {
            GateStage::Compile => Some(format!(
                "The previous harness did not build. Fix these errors:\n{}",
                head(&report.compile_diagnostics, DIAGNOSTIC_LINES)
            )),
            GateStage::Execute => Some(format!(
                "The previous harness failed on trivial inputs ({:?}). It must handle empty and very short inputs:\n{}",
                report.smoke_run,
                head(&report.smoke_detail, DIAGNOSTIC_LINES)
            )),
            GateStage::Coverage => Some(format!(
                "The previous harness executed only {:.0}% of the lines of {}. Make sure the fuzzer input reaches the function-under-test.",
                report.coverage_fraction * 100.0,
                target.record.name
            )),
        },
        Failure::Campaign(result) => {
            let sensitive = target.verdict.predicted_cwes.iter().any(|c| c.is_size_sensitive());
            (result.crashes.is_empty() && sensitive).then(|| NO_SIZE_CAP.to_string())
        }
        Failure::EmptyCompletion => {
            Some("The previous reply contained no code. Reply with the complete harness in one fenced code block.".into())
        }
    }
}

/// The next attempt's prompt, carrying feedback about `failure`.
///
/// The size-cap instruction, once given, stays in every later prompt.
pub fn refine_prompt(
    session: &GenerationSession,
    failure: Failure<'_>,
    template: &PromptTemplate,
) -> Result<Prompt, SynthesisError> {
    let attempt = session.next_attempt();
    if attempt > session.max_attempts {
        return Err(SynthesisError::AttemptsExhausted {
            function: session.target.record.name.clone(),
            max_attempts: session.max_attempts,
        });
    }
    let mut parts = Vec::new();
    let sticky = session
        .history
        .iter()
        .any(|r| r.prompt.as_ref().is_some_and(|p| p.extra.contains(NO_SIZE_CAP)));
    if let Some(text) = failure_instructions(&session.target, failure) {
        parts.push(text);
    }
    if sticky && !parts.iter().any(|p| p.contains(NO_SIZE_CAP)) {
        parts.push(NO_SIZE_CAP.to_string());
    }
    build_prompt_attempt(&session.target, template, &parts.join("\n"), attempt)
}

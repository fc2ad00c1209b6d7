//! The per-target state machine: synthesis, admission, campaign and
//! confirmation, persisting after every step.

use std::path::{Path, PathBuf};

use log::{info, warn};

use super::{read_json, write_json, PipelineError};
use crate::campaign::{
    confirm_verdict, run_campaign, CampaignConfig, CampaignError, CampaignRequest, CampaignResult, Confirmation,
};
use crate::gate::{gate, GateConfig, GateError, GateReport};
use crate::oracle::TargetCandidate;
use crate::report::{SessionSummary, TargetReport};
use crate::synthesis::{
    build_prompt, generate_driver, refine_prompt, template_driver, template_supported, AttemptRecord, DriverCandidate,
    DriverOptions, Failure, GenerationBackend, GenerationSession, PromptTemplate, Provenance, SessionStatus,
    SynthesisError, NO_SIZE_CAP,
};

pub const SESSION_FILE: &str = "session.json";
pub const CAMPAIGN_FILE: &str = "campaign.json";
pub const OUTCOME_FILE: &str = "outcome.json";

pub(crate) const NO_HARNESS_NOTE: &str = "no harness passed the gate; not fuzzed";

/// Shared, read-only inputs of per-target work.
pub(crate) struct TargetContext<'a> {
    pub gate: GateConfig,
    pub campaign: &'a CampaignConfig,
    pub template: PromptTemplate,
    pub driver: &'a DriverOptions,
    pub backend: Option<Box<dyn GenerationBackend>>,
    pub template_fallback: bool,
    pub max_attempts: u32,
    pub temperature: f64,
}

pub(crate) struct TargetDir(pub PathBuf);

impl TargetDir {
    pub fn session(&self) -> PathBuf {
        self.0.join(SESSION_FILE)
    }

    pub fn campaign(&self) -> PathBuf {
        self.0.join(CAMPAIGN_FILE)
    }

    pub fn outcome(&self) -> PathBuf {
        self.0.join(OUTCOME_FILE)
    }

    fn attempt(&self, n: u32) -> PathBuf {
        self.0.join(format!("attempt-{n}"))
    }

    fn replies(&self) -> PathBuf {
        self.0.join("replies")
    }
}

fn synthesis_failure(target: &str, e: SynthesisError) -> PipelineError {
    PipelineError::Target(format!("{target}: {e}"))
}

fn gate_failure(e: GateError) -> PipelineError {
    match e {
        GateError::ToolchainMissing(why) => PipelineError::Environment(why),
        GateError::InvalidConfig(why) => PipelineError::Config(why),
        other => PipelineError::Target(other.to_string()),
    }
}

fn last_provenance(session: &GenerationSession) -> Option<Provenance> {
    session
        .history
        .iter()
        .rev()
        .find_map(|r| r.candidate.as_ref())
        .map(|c| c.provenance)
}

impl TargetContext<'_> {
    fn template_candidate(&self, target: &TargetCandidate) -> Result<DriverCandidate, SynthesisError> {
        template_driver(&target.record, self.driver)
    }

    /// Produces the next attempt, asking the backend when there is one and
    /// falling back to the template driver when it cannot be reached.
    /// Returns `false` when no further attempt is possible.
    fn next_attempt(
        &self,
        session: &mut GenerationSession,
        failure: Option<Failure<'_>>,
        dir: &TargetDir,
    ) -> Result<bool, PipelineError> {
        let name = session.target.record.name.clone();
        if !session.attempts_left() || last_provenance(session) == Some(Provenance::Template) {
            return Ok(false);
        }
        let attempt = session.next_attempt();
        let eligible = template_supported(&session.target.record, &self.driver.type_aliases);

        let Some(backend) = &self.backend else {
            if !eligible {
                session.status = SessionStatus::Aborted;
                return Err(PipelineError::Target(format!(
                    "{name}: no generation backend configured and the signature does not fit the template driver"
                )));
            }
            let candidate = self
                .template_candidate(&session.target)
                .map_err(|e| synthesis_failure(&name, e))?;
            push(session, attempt, None, Some(candidate), None)?;
            return Ok(true);
        };

        let prompt = match failure {
            None => build_prompt(&session.target, &self.template, ""),
            Some(f) => refine_prompt(session, f, &self.template),
        }
        .map_err(|e| synthesis_failure(&name, e))?;
        match generate_driver(&prompt, backend.as_ref(), Some(&dir.replies())) {
            Ok(candidate) => push(session, attempt, Some(prompt), Some(candidate), None)?,
            Err(SynthesisError::EmptyCompletion) => {
                push(session, attempt, Some(prompt), None, Some("empty completion".into()))?
            }
            Err(SynthesisError::BackendUnavailable(why)) if self.template_fallback && eligible => {
                warn!("{name}: {why}; using the template driver");
                let candidate = self
                    .template_candidate(&session.target)
                    .map_err(|e| synthesis_failure(&name, e))?;
                push(
                    session,
                    attempt,
                    None,
                    Some(candidate),
                    Some(format!("backend unavailable ({why}); template driver used")),
                )?;
            }
            Err(e) => {
                session.status = SessionStatus::Aborted;
                return Err(synthesis_failure(&name, e));
            }
        }
        Ok(true)
    }

    /// Creates the first attempt of a fresh session.
    pub fn synthesize(&self, target: &TargetCandidate, dir: &TargetDir) -> Result<GenerationSession, PipelineError> {
        let mut session = GenerationSession::new(target.clone(), self.max_attempts, self.temperature);
        let result = self.next_attempt(&mut session, None, dir);
        write_json(&dir.session(), &session)?;
        result.map(|_| session)
    }

    /// Gates pending candidates, refining until one is accepted or the
    /// attempts run out.
    pub fn admit(&self, session: &mut GenerationSession, dir: &TargetDir) -> Result<(), PipelineError> {
        let result = self.admit_inner(session, dir);
        write_json(&dir.session(), session)?;
        result
    }

    fn admit_inner(&self, session: &mut GenerationSession, dir: &TargetDir) -> Result<(), PipelineError> {
        loop {
            let Some(last) = session.history.last_mut() else {
                session.status = SessionStatus::Aborted;
                return Ok(());
            };
            let report = match (&last.candidate, &last.gate) {
                (Some(candidate), None) => {
                    let report = gate(
                        candidate,
                        &self.gate,
                        &session.target.record,
                        &dir.attempt(last.attempt),
                    )
                    .map_err(gate_failure)?;
                    info!(
                        "{}: attempt {} {:?}",
                        candidate.target_function,
                        last.attempt,
                        report
                            .rejected_stage
                            .map_or("accepted".to_string(), |s| format!("rejected at {s:?}"))
                    );
                    last.gate = Some(report.clone());
                    Some(report)
                }
                (Some(_), Some(report)) => Some(report.clone()),
                (None, _) => None,
            };
            if report.as_ref().is_some_and(GateReport::accepted) {
                session.status = SessionStatus::Accepted;
                return Ok(());
            }
            let failure = report.as_ref().map_or(Failure::EmptyCompletion, Failure::Gate);
            if !self.next_attempt(session, Some(failure), dir)? {
                session.status = SessionStatus::Exhausted;
                return Ok(());
            }
        }
    }

    /// Fuzzes the accepted harness and confirms the verdict. A crash-free
    /// campaign on a size-sensitive prediction earns the model one more
    /// harness without size caps while attempts remain.
    pub fn fuzz(&self, session: &mut GenerationSession, dir: &TargetDir) -> Result<TargetReport, PipelineError> {
        let verdict = session.target.verdict.clone();
        let mut campaign: Option<CampaignResult> = None;
        while let Some((attempt, binary)) = accepted_harness(session) {
            let req = CampaignRequest {
                harness: &binary,
                target: &session.target.record,
                predicted_cwes: &verdict.predicted_cwes,
                target_dir: &dir.0,
                build: &self.gate.build,
            };
            let result = run_campaign(&req, self.campaign).map_err(|e| match e {
                CampaignError::InvalidConfig(why) => PipelineError::Config(why),
                other => PipelineError::Target(other.to_string()),
            })?;
            write_json(&dir.campaign(), &result)?;
            let retry = result.crashes.is_empty() && self.may_lift_size_cap(session);
            let result = campaign.insert(result);
            if !retry || !self.next_attempt(session, Some(Failure::Campaign(result)), dir)? {
                break;
            }
            info!(
                "{}: crash-free campaign; asking for a harness without size caps",
                verdict.function_name
            );
            self.admit(session, dir)?;
            if accepted_harness(session).map(|(a, _)| a) == Some(attempt) {
                // The new harness was rejected; the earlier one stands.
                session.status = SessionStatus::Accepted;
                break;
            }
        }
        write_json(&dir.session(), session)?;
        let confirmation = match &campaign {
            Some(result) => confirm_verdict(&verdict, result),
            None => Confirmation::unconfirmed(&verdict, NO_HARNESS_NOTE),
        };
        let report = TargetReport {
            target: session.target.clone(),
            session: SessionSummary::from(&*session),
            gate_reports: gate_reports(session),
            campaign,
            confirmation,
            error: None,
        };
        write_json(&dir.outcome(), &report)?;
        Ok(report)
    }

    fn may_lift_size_cap(&self, session: &GenerationSession) -> bool {
        let already_asked = session
            .history
            .iter()
            .any(|r| r.prompt.as_ref().is_some_and(|p| p.extra.contains(NO_SIZE_CAP)));
        session
            .target
            .verdict
            .predicted_cwes
            .iter()
            .any(|c| c.is_size_sensitive())
            && last_provenance(session) == Some(Provenance::Llm)
            && !already_asked
            && session.attempts_left()
    }
}

fn accepted_harness(session: &GenerationSession) -> Option<(u32, PathBuf)> {
    let record = session
        .history
        .iter()
        .rev()
        .find(|r| r.gate.as_ref().is_some_and(GateReport::accepted))?;
    Some((record.attempt, record.gate.as_ref()?.binary.clone()?))
}

fn push(
    session: &mut GenerationSession,
    attempt: u32,
    prompt: Option<crate::synthesis::Prompt>,
    candidate: Option<DriverCandidate>,
    note: Option<String>,
) -> Result<(), PipelineError> {
    let name = session.target.record.name.clone();
    session
        .record(AttemptRecord {
            attempt,
            prompt,
            candidate,
            gate: None,
            note,
        })
        .map_err(|e| synthesis_failure(&name, e))
}

pub(crate) fn gate_reports(session: &GenerationSession) -> Vec<GateReport> {
    session.history.iter().filter_map(|r| r.gate.clone()).collect()
}

/// Outcome for a target whose processing failed or never finished.
pub(crate) fn failed_report(
    target: &TargetCandidate,
    session: Option<&GenerationSession>,
    error: String,
) -> TargetReport {
    TargetReport {
        target: target.clone(),
        session: session.map_or(
            SessionSummary {
                status: SessionStatus::Aborted,
                attempts: 0,
                max_attempts: 0,
                accepted_attempt: None,
                accepted_provenance: None,
            },
            SessionSummary::from,
        ),
        gate_reports: session.map(gate_reports).unwrap_or_default(),
        campaign: None,
        confirmation: Confirmation::unconfirmed(&target.verdict, format!("not fuzzed: {error}")),
        error: Some(error),
    }
}

pub(crate) fn load_session(dir: &TargetDir) -> Result<Option<GenerationSession>, PipelineError> {
    let path = dir.session();
    if path.is_file() {
        read_json(&path).map(Some)
    } else {
        Ok(None)
    }
}

pub(crate) fn target_dir_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

pub(crate) fn dir_for(workdir: &Path, name: &str) -> TargetDir {
    TargetDir(workdir.join("targets").join(target_dir_name(name)))
}

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Duration;

use log::warn;
use rayon::prelude::*;

use super::{
    heuristic1, heuristic2, lexical_vuln_score, Assessment, ExternalOracle, OracleConfig, OracleError, OracleVerdict,
    TargetCandidate, VerdictSource,
};
use crate::cwe::Cwe;
use crate::inventory::FunctionRecord;

/// Scores and ranks functions under one configuration.
pub struct TargetOracle {
    config: OracleConfig,
    external: Option<ExternalOracle>,
    hints: BTreeMap<String, Vec<Cwe>>,
}

impl TargetOracle {
    pub fn new(config: OracleConfig) -> Result<Self, OracleError> {
        config.validate()?;
        let external = config
            .external_oracle_command
            .as_deref()
            .map(|cmd| ExternalOracle::new(cmd, Duration::from_secs(config.external_timeout_seconds)))
            .transpose()?;
        Ok(TargetOracle {
            config,
            external,
            hints: BTreeMap::new(),
        })
    }

    /// CWE labels known in advance for some functions (by name). They replace
    /// the scorer's predictions for those functions.
    pub fn with_hints(mut self, hints: BTreeMap<String, Vec<Cwe>>) -> Self {
        self.hints = hints;
        self
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    /// Queries the external model when configured, degrading to the lexical
    /// scorer on any failure.
    fn assess(&self, record: &FunctionRecord) -> (Assessment, VerdictSource) {
        if let Some(ext) = &self.external {
            match ext.query(record) {
                Ok(a) => return (a, VerdictSource::External),
                Err(e) => warn!("{}: {e}; falling back to the lexical scorer", record.name),
            }
        }
        let (score, predicted_cwes) = lexical_vuln_score(&record.body);
        (Assessment { score, predicted_cwes }, VerdictSource::BuiltinLexical)
    }

    pub fn verdict(&self, record: &FunctionRecord) -> OracleVerdict {
        let (assessment, source) = self.assess(record);
        let h1 = heuristic1(record, &self.config);
        let h2 = heuristic2(record, &self.config);
        let w = self.config.weights;
        let composite = w.complexity_name * f64::from(u8::from(h1))
            + w.fuzz_interface * f64::from(u8::from(h2))
            + w.vuln_score * assessment.score;
        let (predicted_cwes, cwes_from_hints) = match self.hints.get(&record.name) {
            Some(h) if !h.is_empty() => (h.clone(), true),
            _ => (assessment.predicted_cwes, false),
        };
        OracleVerdict {
            function_name: record.name.clone(),
            score: composite.clamp(0.0, 1.0),
            predicted_cwes,
            heuristic1: h1,
            heuristic2: h2,
            heuristic3_score: assessment.score,
            source,
            cwes_from_hints,
        }
    }

    /// Full ranking of `records` (not truncated to `top_k`).
    pub fn rank_all(&self, records: &[FunctionRecord]) -> Result<Vec<TargetCandidate>, OracleError> {
        if records.is_empty() {
            return Err(OracleError::EmptyInventory);
        }
        let verdicts: Vec<OracleVerdict> = records.par_iter().map(|r| self.verdict(r)).collect();
        let mut scored: Vec<(&FunctionRecord, OracleVerdict)> = records.iter().zip(verdicts).collect();
        scored.sort_by(|(ra, va), (rb, vb)| compare(ra, va, rb, vb));
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (record, verdict))| TargetCandidate {
                record: record.clone(),
                verdict,
                rank: i + 1,
            })
            .collect())
    }

    /// The `top_k` best candidates.
    pub fn rank(&self, records: &[FunctionRecord]) -> Result<Vec<TargetCandidate>, OracleError> {
        let mut all = self.rank_all(records)?;
        all.truncate(self.config.top_k);
        Ok(all)
    }
}

fn compare(ra: &FunctionRecord, va: &OracleVerdict, rb: &FunctionRecord, vb: &OracleVerdict) -> Ordering {
    vb.score
        .total_cmp(&va.score)
        .then(vb.heuristic3_score.total_cmp(&va.heuristic3_score))
        .then_with(|| ra.name.cmp(&rb.name))
        .then_with(|| ra.source_path.cmp(&rb.source_path))
        .then(ra.line_span.cmp(&rb.line_span))
}

/// Ranks `records` and keeps the `top_k` best.
pub fn rank_targets(records: &[FunctionRecord], config: &OracleConfig) -> Result<Vec<TargetCandidate>, OracleError> {
    TargetOracle::new(config.clone())?.rank(records)
}

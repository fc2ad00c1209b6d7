//! Target oracle: decides which functions are worth a fuzz driver.
//!
//! Three heuristics feed a convex combination:
//!
//! 1. high cyclomatic complexity and a parse-like name,
//! 2. a parameter list that already looks like the fuzzing entry point,
//! 3. a vulnerability-likelihood score, either from the built-in lexical
//!    scorer or from an external model process speaking line-delimited JSON.
//!
//! Functions are ranked by `w1·[h1] + w2·[h2] + w3·h3`, ties broken by the
//! higher h3 score and then by name.

mod config;
mod external;
mod heuristics;
pub mod lexical;
mod rank;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cwe::Cwe;
use crate::inventory::FunctionRecord;

pub use config::{OracleConfig, Weights};
pub use external::{ExternalOracle, OracleReply, OracleRequest};
pub use heuristics::{heuristic1, heuristic2};
pub use lexical::{lexical_vuln_score, LexicalFeatures};
pub use rank::{rank_targets, TargetOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictSource {
    BuiltinLexical,
    External,
}

/// Per-function judgment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub function_name: String,
    /// Composite ranking score in `[0, 1]`.
    pub score: f64,
    pub predicted_cwes: Vec<Cwe>,
    pub heuristic1: bool,
    pub heuristic2: bool,
    pub heuristic3_score: f64,
    pub source: VerdictSource,
    /// Set when `predicted_cwes` came from signature hints rather than the scorer.
    #[serde(default)]
    pub cwes_from_hints: bool,
}

impl OracleVerdict {
    /// Checks the score bounds and the hint/score consistency rule.
    pub fn check_invariants(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(format!("score {} outside [0,1]", self.score));
        }
        if !(0.0..=1.0).contains(&self.heuristic3_score) {
            return Err(format!("heuristic3_score {} outside [0,1]", self.heuristic3_score));
        }
        if !self.predicted_cwes.is_empty() && self.heuristic3_score <= 0.0 && !self.cwes_from_hints {
            return Err("predicted CWEs without a positive score or hints".into());
        }
        Ok(())
    }
}

/// A ranked function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetCandidate {
    pub record: FunctionRecord,
    pub verdict: OracleVerdict,
    /// 1-based.
    pub rank: usize,
}

/// Score and weaknesses produced by a vulnerability model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub score: f64,
    pub predicted_cwes: Vec<Cwe>,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("nothing to rank: the inventory is empty")]
    EmptyInventory,
    #[error("external oracle unavailable: {0}")]
    OracleUnavailable(String),
    #[error("external oracle protocol error: {0}")]
    OracleProtocolError(String),
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
}

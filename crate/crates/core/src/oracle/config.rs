use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::inventory::{default_type_aliases, TypeAliases};

/// Heuristic weights; serialized as `[w1, w2, w3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Weights {
    pub complexity_name: f64,
    pub fuzz_interface: f64,
    pub vuln_score: f64,
}

impl Weights {
    pub const fn new(w1: f64, w2: f64, w3: f64) -> Self {
        Weights {
            complexity_name: w1,
            fuzz_interface: w2,
            vuln_score: w3,
        }
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::new(0.2, 0.2, 0.6)
    }
}

impl From<[f64; 3]> for Weights {
    fn from(w: [f64; 3]) -> Self {
        Weights::new(w[0], w[1], w[2])
    }
}

impl From<Weights> for [f64; 3] {
    fn from(w: Weights) -> Self {
        [w.complexity_name, w.fuzz_interface, w.vuln_score]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub h1_complexity_threshold: u32,
    pub h1_name_substrings: Vec<String>,
    pub weights: Weights,
    pub top_k: usize,
    /// Command line of an external scoring process; split shell-style.
    pub external_oracle_command: Option<String>,
    pub external_timeout_seconds: u64,
    /// typedef table used when matching the fuzzing-interface signature.
    pub type_aliases: TypeAliases,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            h1_complexity_threshold: 10,
            h1_name_substrings: vec!["parse".to_string()],
            weights: Weights::default(),
            top_k: 10,
            external_oracle_command: None,
            external_timeout_seconds: 30,
            type_aliases: default_type_aliases(),
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        let w: [f64; 3] = self.weights.into();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(OracleError::InvalidConfig(format!(
                "weights must be non-negative, got {w:?}"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(OracleError::InvalidConfig(format!("weights must sum to 1, got {sum}")));
        }
        if self.top_k == 0 {
            return Err(OracleError::InvalidConfig("top_k must be at least 1".into()));
        }
        if self.h1_complexity_threshold == 0 {
            return Err(OracleError::InvalidConfig(
                "h1_complexity_threshold must be positive".into(),
            ));
        }
        if self.external_timeout_seconds == 0 {
            return Err(OracleError::InvalidConfig(
                "external_timeout_seconds must be positive".into(),
            ));
        }
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

use super::CampaignResult;
use crate::cwe::Cwe;
use crate::oracle::OracleVerdict;

pub const UNCONFIRMED_NOTE: &str = "no crash within the budget; this does not rule out a vulnerability";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfirmationOutcome {
    ConfirmedMatchingCwe,
    ConfirmedOtherCrash,
    Unconfirmed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confirmation {
    pub target_function: String,
    pub predicted_cwes: Vec<Cwe>,
    pub outcome: ConfirmationOutcome,
    pub matched_cwe: Option<Cwe>,
    /// Index into the campaign's deduplicated crashes.
    pub matched_crash: Option<usize>,
    pub note: Option<String>,
}

impl Confirmation {
    /// Outcome confirmed without any campaign, e.g. when no harness passed
    /// the gate.
    pub fn unconfirmed(verdict: &OracleVerdict, note: impl Into<String>) -> Self {
        Confirmation {
            target_function: verdict.function_name.clone(),
            predicted_cwes: verdict.predicted_cwes.clone(),
            outcome: ConfirmationOutcome::Unconfirmed,
            matched_cwe: None,
            matched_crash: None,
            note: Some(note.into()),
        }
    }
}

/// Compares the campaign's crashes with the predicted CWEs.
pub fn confirm_verdict(verdict: &OracleVerdict, result: &CampaignResult) -> Confirmation {
    let matching = result.crashes.iter().enumerate().find_map(|(i, c)| {
        c.classified_cwe
            .filter(|cwe| verdict.predicted_cwes.contains(cwe))
            .map(|cwe| (i, cwe))
    });
    let (outcome, matched_cwe, matched_crash, note) = match matching {
        Some((i, cwe)) => (ConfirmationOutcome::ConfirmedMatchingCwe, Some(cwe), Some(i), None),
        None if !result.crashes.is_empty() => (ConfirmationOutcome::ConfirmedOtherCrash, None, Some(0), None),
        None => (
            ConfirmationOutcome::Unconfirmed,
            None,
            None,
            Some(UNCONFIRMED_NOTE.to_string()),
        ),
    };
    Confirmation {
        target_function: verdict.function_name.clone(),
        predicted_cwes: verdict.predicted_cwes.clone(),
        outcome,
        matched_cwe,
        matched_crash,
        note,
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SynthesisError;
use crate::cwe::Cwe;
use crate::oracle::TargetCandidate;

const DEFAULT_TEMPLATE: &str = include_str!("../../templates/default_prompt.yaml");

pub const SIGNATURE: &str = "{signature}";
pub const CWE_NOTE: &str = "{cwe_note}";
pub const EXTRA_INSTRUCTIONS: &str = "{extra_instructions}";

/// The four prompt sections, in rendering order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub system_prompt: String,
    pub language_instructions: String,
    pub instructions_examples: String,
    pub problem_statement_template: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::parse(DEFAULT_TEMPLATE).expect("bundled prompt template is valid")
    }
}

impl PromptTemplate {
    pub fn parse(yaml: &str) -> Result<Self, SynthesisError> {
        let t: PromptTemplate =
            serde_yaml::from_str(yaml).map_err(|e| SynthesisError::InvalidTemplate(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, SynthesisError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SynthesisError::InvalidTemplate(format!("{}: {e}", path.display())))?;
        PromptTemplate::parse(&text)
    }

    pub fn validate(&self) -> Result<(), SynthesisError> {
        for (name, text) in self.sections() {
            if text.trim().is_empty() {
                return Err(SynthesisError::InvalidTemplate(format!("section {name} is empty")));
            }
        }
        if !self.problem_statement_template.contains(SIGNATURE) {
            return Err(SynthesisError::InvalidTemplate(
                "problem_statement_template lacks the {signature} placeholder".into(),
            ));
        }
        Ok(())
    }

    pub fn sections(&self) -> [(&'static str, &str); 4] {
        [
            ("system_prompt", &self.system_prompt),
            ("language_instructions", &self.language_instructions),
            ("instructions_examples", &self.instructions_examples),
            ("problem_statement_template", &self.problem_statement_template),
        ]
    }
}

/// A rendered prompt for one attempt at one target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub rendered_text: String,
    pub target_function: String,
    pub target_rank: usize,
    pub cwe_annotations: Vec<Cwe>,
    pub attempt: u32,
    /// The text substituted for `{extra_instructions}`.
    pub extra: String,
}

/// `Note: The function is a candidate for the vulnerability CWE-415 (Double Free)`
pub fn cwe_note_line(cwe: Cwe) -> String {
    format!(
        "Note: The function is a candidate for the vulnerability {cwe} ({})",
        cwe.name().unwrap_or("unlisted weakness")
    )
}

/// Renders the first attempt's prompt for `target`.
pub fn build_prompt(
    target: &TargetCandidate,
    template: &PromptTemplate,
    extra: &str,
) -> Result<Prompt, SynthesisError> {
    build_prompt_attempt(target, template, extra, 1)
}

pub(crate) fn build_prompt_attempt(
    target: &TargetCandidate,
    template: &PromptTemplate,
    extra: &str,
    attempt: u32,
) -> Result<Prompt, SynthesisError> {
    template.validate()?;
    let record = &target.record;
    if record.name.trim().is_empty() || record.return_type.trim().is_empty() {
        return Err(SynthesisError::MissingSignature(record.name.clone()));
    }
    let cwes = target.verdict.predicted_cwes.clone();
    let note = cwes.iter().map(|c| cwe_note_line(*c)).collect::<Vec<_>>().join("\n");
    let problem = render_problem(&template.problem_statement_template, &record.signature(), &note, extra);

    let mut text = [
        template.system_prompt.trim_end(),
        template.language_instructions.trim_end(),
        template.instructions_examples.trim_end(),
        problem.trim_end(),
    ]
    .join("\n\n");
    text.push('\n');

    Ok(Prompt {
        rendered_text: text,
        target_function: record.name.clone(),
        target_rank: target.rank,
        cwe_annotations: cwes,
        attempt,
        extra: extra.to_string(),
    })
}

fn render_problem(template: &str, signature: &str, note: &str, extra: &str) -> String {
    let mut out = String::new();
    for line in template.lines() {
        let bare = line.trim();
        if (bare == CWE_NOTE && note.is_empty()) || (bare == EXTRA_INSTRUCTIONS && extra.trim().is_empty()) {
            continue;
        }
        let rendered = line
            .replace(SIGNATURE, signature)
            .replace(CWE_NOTE, note)
            .replace(EXTRA_INSTRUCTIONS, extra.trim_end());
        out.push_str(&rendered);
        out.push('\n');
    }
    out
}

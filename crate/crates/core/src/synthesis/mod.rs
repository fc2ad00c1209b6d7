//! Driver synthesis: prompt rendering, generation backends, the template
//! fallback and prompt refinement across attempts.

mod backend;
mod candidate;
mod driver;
pub(crate) mod prompt;
mod refine;

use std::path::PathBuf;

use thiserror::Error;

pub use backend::{
    generate_driver, prompt_hash, BackendConfig, BackendKind, GenerationBackend, HttpBackend, ReplayBackend,
};
pub use candidate::{detect_language, extract_code_block, DriverCandidate, Provenance, ENTRY_POINT};
pub use driver::{template_driver, template_supported, DriverOptions};
pub use prompt::{build_prompt, cwe_note_line, Prompt, PromptTemplate};
pub use refine::{
    refine_prompt, AttemptRecord, Failure, GenerationSession, SessionStatus, DEFAULT_MAX_ATTEMPTS, NO_SIZE_CAP,
};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("{0}: no renderable signature")]
    MissingSignature(String),
    #[error("invalid prompt template: {0}")]
    InvalidTemplate(String),
    #[error("generation backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("generation backend returned an empty completion")]
    EmptyCompletion,
    #[error("{function}: unsupported signature for the template driver: {reason}")]
    UnsupportedSignature { function: String, reason: String },
    #[error("{function}: all {max_attempts} attempts used")]
    AttemptsExhausted { function: String, max_attempts: u32 },
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}

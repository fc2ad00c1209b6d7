use std::path::{Path, PathBuf};
use std::time::Duration;

use log::debug;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::candidate::{detect_language, extract_code_block, DriverCandidate, Provenance};
use super::{Prompt, SynthesisError};

/// Hex SHA-256 of the rendered prompt; the key for recorded replies.
pub fn prompt_hash(rendered_text: &str) -> String {
    hex::encode(Sha256::digest(rendered_text.as_bytes()))
}

/// Something that turns a prompt into a completion.
pub trait GenerationBackend: Send + Sync {
    fn complete(&self, prompt: &Prompt) -> Result<String, SynthesisError>;
    fn describe(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Replay,
    /// No model: every target goes straight to the template driver.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub api_key_env: String,
    pub timeout_seconds: u64,
    pub replay_dir: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::None,
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4".into(),
            temperature: 0.0,
            api_key_env: "ORACLEFUZZ_API_KEY".into(),
            timeout_seconds: 120,
            replay_dir: None,
        }
    }
}

impl BackendConfig {
    pub fn build(&self) -> Result<Option<Box<dyn GenerationBackend>>, SynthesisError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(SynthesisError::InvalidTemplate(format!(
                "temperature {} must be >= 0",
                self.temperature
            )));
        }
        Ok(match self.kind {
            BackendKind::None => None,
            BackendKind::Http => Some(Box::new(HttpBackend::new(self))),
            BackendKind::Replay => {
                let dir = self
                    .replay_dir
                    .clone()
                    .ok_or_else(|| SynthesisError::BackendUnavailable("replay backend without replay_dir".into()))?;
                Some(Box::new(ReplayBackend::new(dir)))
            }
        })
    }
}

/// Chat-completions endpoint (`POST {base_url}/chat/completions`).
pub struct HttpBackend {
    base_url: String,
    model: String,
    temperature: f64,
    api_key_env: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: &BackendConfig) -> Self {
        HttpBackend {
            base_url: config.base_url.trim_end_matches('/').to_string(),
            model: config.model.clone(),
            temperature: config.temperature,
            api_key_env: config.api_key_env.clone(),
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(config.timeout_seconds.max(1)))
                .build(),
        }
    }
}

impl GenerationBackend for HttpBackend {
    fn complete(&self, prompt: &Prompt) -> Result<String, SynthesisError> {
        let key = std::env::var(&self.api_key_env)
            .map_err(|_| SynthesisError::BackendUnavailable(format!("{} is not set", self.api_key_env)))?;
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt.rendered_text}],
        });
        let url = format!("{}/chat/completions", self.base_url);
        let reply: serde_json::Value = self
            .agent
            .post(&url)
            .set("Authorization", &format!("Bearer {key}"))
            .send_json(body)
            .map_err(|e| SynthesisError::BackendUnavailable(format!("{url}: {e}")))?
            .into_json()
            .map_err(|e| SynthesisError::BackendUnavailable(format!("{url}: unreadable reply: {e}")))?;
        Ok(reply["choices"][0]["message"]["content"]
            .as_str()
            .unwrap_or_default()
            .to_string())
    }

    fn describe(&self) -> String {
        format!("http {} ({})", self.base_url, self.model)
    }
}

/// Canned replies stored as `<prompt hash>.txt`.
pub struct ReplayBackend {
    dir: PathBuf,
}

impl ReplayBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayBackend { dir: dir.into() }
    }

    pub fn reply_path(dir: &Path, rendered_text: &str) -> PathBuf {
        dir.join(format!("{}.txt", prompt_hash(rendered_text)))
    }
}

impl GenerationBackend for ReplayBackend {
    fn complete(&self, prompt: &Prompt) -> Result<String, SynthesisError> {
        let path = ReplayBackend::reply_path(&self.dir, &prompt.rendered_text);
        std::fs::read_to_string(&path)
            .map_err(|e| SynthesisError::BackendUnavailable(format!("no recorded reply {}: {e}", path.display())))
    }

    fn describe(&self) -> String {
        format!("replay {}", self.dir.display())
    }
}

/// Asks `backend` for a harness. The raw reply is kept under `reply_dir`
/// (named like a replay fixture) when given.
pub fn generate_driver(
    prompt: &Prompt,
    backend: &dyn GenerationBackend,
    reply_dir: Option<&Path>,
) -> Result<DriverCandidate, SynthesisError> {
    let reply = backend.complete(prompt)?;
    if let Some(dir) = reply_dir {
        std::fs::create_dir_all(dir).map_err(|e| SynthesisError::Io(dir.to_path_buf(), e))?;
        let path = ReplayBackend::reply_path(dir, &prompt.rendered_text);
        std::fs::write(&path, &reply).map_err(|e| SynthesisError::Io(path, e))?;
    }
    if reply.trim().is_empty() {
        return Err(SynthesisError::EmptyCompletion);
    }
    let (source_text, info) = extract_code_block(&reply);
    debug!(
        "{}: {} bytes of harness from {}",
        prompt.target_function,
        source_text.len(),
        backend.describe()
    );
    Ok(DriverCandidate {
        language: detect_language(&source_text, info.as_deref()),
        source_text,
        provenance: Provenance::Llm,
        attempt: prompt.attempt,
        target_function: prompt.target_function.clone(),
    })
}

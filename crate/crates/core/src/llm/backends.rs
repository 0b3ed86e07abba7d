//! Text-generation backends: a deterministic mock fed from fixture files
//! and a generic HTTP chat-completion client. The mock exists so the whole
//! pipeline can run and be tested without a network or a real model.

use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::abi::keccak256;
use crate::llm::LlmError;

#[derive(Debug)]
pub enum BackendError {
    /// Network-level failure; worth retrying.
    Transport(String),
    /// The service answered but with an unusable response.
    Api(String),
}

impl BackendError {
    pub fn is_transient(&self) -> bool {
        matches!(self, BackendError::Transport(_))
    }
}

impl fmt::Display for BackendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendError::Transport(m) => write!(f, "transport: {m}"),
            BackendError::Api(m) => write!(f, "api: {m}"),
        }
    }
}

impl std::error::Error for BackendError {}

pub trait LlmBackend: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, prompt: &str) -> Result<String, BackendError>;
}

/// Returned by the mock for prompts it has no fixture for; parseable and
/// claims nothing.
pub const GENERIC_MOCK_RESPONSE: &str = "Summary\nNo anomalous behavior identified from the \
provided events.\n\nPattern Analysis\nThe event sequence does not match any of the configured \
vulnerability conditions.\n\nFurther Recommendation\nNo action required.\n";

/// Deterministic backend that answers from a directory of canned response
/// files, one per prompt: `<keccak-256 of the prompt, hex>.txt`.
pub struct MockBackend {
    dir: PathBuf,
}

impl MockBackend {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self, LlmError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::read_dir(&dir).map_err(|e| LlmError::MockDir {
            dir: dir.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(MockBackend { dir })
    }

    pub fn response_path(&self, prompt: &str) -> PathBuf {
        self.dir
            .join(format!("{}.txt", hex::encode(keccak256(prompt.as_bytes()))))
    }
}

impl LlmBackend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn generate(&self, prompt: &str) -> Result<String, BackendError> {
        match std::fs::read_to_string(self.response_path(prompt)) {
            Ok(text) => Ok(text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Ok(GENERIC_MOCK_RESPONSE.to_string())
            }
            Err(e) => Err(BackendError::Api(format!(
                "unreadable mock response file: {e}"
            ))),
        }
    }
}

/// Environment variable holding the API key for the HTTP backend. The key
/// is read from the environment only, never accepted as a flag or logged.
pub const LLM_KEY_ENV: &str = "ETRACE_LLM_KEY";

/// Generic chat-completion client: POSTs `{model, temperature, messages}`
/// and reads `choices[0].message.content`.
pub struct HttpBackend {
    endpoint: String,
    model: String,
    temperature: f64,
    api_key: String,
}

impl HttpBackend {
    pub fn new(endpoint: &str, model: &str, temperature: f64) -> Result<Self, LlmError> {
        let api_key = std::env::var(LLM_KEY_ENV)
            .map_err(|_| LlmError::Config(format!("{LLM_KEY_ENV} is not set")))?;
        if endpoint.is_empty() {
            return Err(LlmError::Config("llm endpoint is not configured".into()));
        }
        Ok(HttpBackend {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            temperature,
            api_key,
        })
    }
}

impl LlmBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn generate(&self, prompt: &str) -> Result<String, BackendError> {
        let payload = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut response = ureq::post(&self.endpoint)
            .header("authorization", &format!("Bearer {}", self.api_key))
            .send_json(&payload)
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let body: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Api(format!("unreadable response body: {e}")))?;
        body.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Api("response carries no message content".into()))
    }
}

//! Blocking client for OpenAI-compatible chat-completion endpoints
//! (Ollama, llama.cpp server, vLLM, ...).

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("request to {url} failed: {message}")]
    Transport { url: String, message: String },
    #[error("request to {url} timed out after {secs}s")]
    Timeout { url: String, secs: u64 },
    #[error("{url} answered HTTP {status}: {body}")]
    Status { url: String, status: u16, body: String },
    #[error("unexpected response shape from {url}: {message}")]
    Malformed { url: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: "user".into(), content: content.into() }
    }
}

/// Anything that turns a message list into assistant text. Implementations
/// must be reentrant: agents decide concurrently.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EndpointConfig {
    /// Base URL up to the API version, e.g. `http://localhost:11434/v1`.
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    /// Bearer token; usually supplied through `TRAITSIM_API_KEY`.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://localhost:11434/v1".into(),
            model: "llama3:70b".into(),
            temperature: 0.7,
            timeout_secs: 120,
            api_key: None,
        }
    }
}

impl EndpointConfig {
    /// Overlay `TRAITSIM_ENDPOINT`, `TRAITSIM_MODEL`, `TRAITSIM_TEMPERATURE`,
    /// `TRAITSIM_TIMEOUT` and `TRAITSIM_API_KEY` when set.
    pub fn with_env(mut self) -> Self {
        if let Ok(v) = std::env::var("TRAITSIM_ENDPOINT") {
            self.base_url = v;
        }
        if let Ok(v) = std::env::var("TRAITSIM_MODEL") {
            self.model = v;
        }
        if let Some(t) = std::env::var("TRAITSIM_TEMPERATURE").ok().and_then(|v| v.parse().ok()) {
            self.temperature = t;
        }
        if let Some(t) = std::env::var("TRAITSIM_TIMEOUT").ok().and_then(|v| v.parse().ok()) {
            self.timeout_secs = t;
        }
        if let Ok(v) = std::env::var("TRAITSIM_API_KEY") {
            if !v.is_empty() {
                self.api_key = Some(v);
            }
        }
        self
    }

    pub fn completions_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

pub struct LlmClient {
    config: EndpointConfig,
    http: reqwest::blocking::Client,
}

impl LlmClient {
    pub fn new(config: EndpointConfig) -> Result<Self, BackendError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| BackendError::Transport { url: config.completions_url(), message: e.to_string() })?;
        Ok(LlmClient { config, http })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn request_body(&self, messages: &[ChatMessage]) -> Value {
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "stream": false,
        })
    }
}

impl CompletionBackend for LlmClient {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, BackendError> {
        let url = self.config.completions_url();
        let mut req = self.http.post(&url).json(&self.request_body(messages));
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout { url: url.clone(), secs: self.config.timeout_secs }
            } else {
                BackendError::Transport { url: url.clone(), message: e.to_string() }
            }
        })?;
        let status = resp.status();
        let body = resp.text().map_err(|e| BackendError::Transport { url: url.clone(), message: e.to_string() })?;
        if !status.is_success() {
            return Err(BackendError::Status { url, status: status.as_u16(), body });
        }
        let value: Value =
            serde_json::from_str(&body).map_err(|e| BackendError::Malformed { url: url.clone(), message: e.to_string() })?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Malformed { url, message: "missing choices[0].message.content".into() })
    }
}

use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

use super::prompt::{format_expansion, format_string_list};
use super::{ChatMessage, Role};

/// Environment variable holding the chat API credential.
pub const API_KEY_ENV: &str = "CHAT_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited (HTTP 429)")]
    RateLimited,
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed completion body: {0}")]
    Malformed(String),
    #[error("missing credential: set {API_KEY_ENV}")]
    MissingCredential,
    #[error("backend cannot answer this request: {0}")]
    Unsupported(String),
}

/// A chat-completion model. Implementations must not keep per-call state that
/// changes pipeline results.
pub trait ChatBackend: Send + Sync {
    fn model_name(&self) -> &str;

    fn price_per_1k_tokens(&self) -> f64;

    fn send(&self, messages: &[ChatMessage]) -> Result<String, BackendError>;
}

/// Published per-1K-token prices for the model families used for cleaning.
pub fn price_per_1k(model: &str) -> Option<f64> {
    if model.starts_with("gpt-4") {
        Some(0.03)
    } else if model.starts_with("gpt-3.5-turbo") {
        Some(0.0015)
    } else {
        None
    }
}

#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    /// Base URL up to and including the version segment, e.g. `https://api.openai.com/v1`.
    pub api_base: String,
    pub model: String,
    pub temperature: f64,
    pub timeout: Duration,
    pub price_per_1k: Option<f64>,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        Self {
            api_base: "https://api.openai.com/v1".into(),
            model: "gpt-3.5-turbo-0613".into(),
            temperature: 0.0,
            timeout: Duration::from_secs(120),
            price_per_1k: None,
        }
    }
}

/// OpenAI-compatible `POST {api_base}/chat/completions` client.
pub struct HttpBackend {
    config: HttpBackendConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    /// Reads the credential from [`API_KEY_ENV`].
    pub fn from_env(config: HttpBackendConfig) -> Result<Self, BackendError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| BackendError::MissingCredential)?;
        if key.trim().is_empty() {
            return Err(BackendError::MissingCredential);
        }
        Ok(Self::new(config, key))
    }

    pub fn new(config: HttpBackendConfig, api_key: String) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            config,
            api_key,
            agent,
        }
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.api_base.trim_end_matches('/'))
    }

    pub fn request_body(&self, messages: &[ChatMessage]) -> Value {
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
        })
    }

    /// `choices[0].message.content` of a completion response.
    pub fn extract_content(body: &str) -> Result<String, BackendError> {
        let value: Value = serde_json::from_str(body).map_err(|e| BackendError::Malformed(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Malformed("no choices[0].message.content".into()))
    }
}

impl ChatBackend for HttpBackend {
    fn model_name(&self) -> &str {
        &self.config.model
    }

    fn price_per_1k_tokens(&self) -> f64 {
        self.config
            .price_per_1k
            .or_else(|| price_per_1k(&self.config.model))
            .unwrap_or(0.0)
    }

    fn send(&self, messages: &[ChatMessage]) -> Result<String, BackendError> {
        let mut response = self
            .agent
            .post(&self.endpoint())
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send(self.request_body(messages).to_string())
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        match status {
            200..=299 => Self::extract_content(&body),
            429 => Err(BackendError::RateLimited),
            _ => Err(BackendError::Status {
                status,
                body: body.chars().take(200).collect(),
            }),
        }
    }
}

/// Offline backend that answers each call with its own arguments: `clean`
/// returns the input terms, `expand` returns them under the request language
/// with an empty English list.
#[derive(Debug, Clone, Default)]
pub struct IdentityBackend;

impl IdentityBackend {
    fn call_args(call: &str, name: &str) -> Option<Vec<Value>> {
        let inner = call.trim().strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?;
        serde_json::from_str::<Vec<Value>>(&format!("[{inner}]")).ok()
    }

    fn strings(v: &Value) -> Vec<String> {
        v.as_array()
            .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
            .unwrap_or_default()
    }
}

impl ChatBackend for IdentityBackend {
    fn model_name(&self) -> &str {
        "identity"
    }

    fn price_per_1k_tokens(&self) -> f64 {
        0.0
    }

    fn send(&self, messages: &[ChatMessage]) -> Result<String, BackendError> {
        let call = messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .ok_or_else(|| BackendError::Unsupported("no user message".into()))?;
        if let Some(args) = Self::call_args(call, "clean") {
            if let Some(terms) = args.get(2) {
                return Ok(format_string_list(&Self::strings(terms)));
            }
        }
        if let Some(args) = Self::call_args(call, "expand") {
            if let (Some(Value::String(lang)), Some(terms)) = (args.first(), args.get(1)) {
                let mut output = vec![(lang.clone(), Self::strings(terms))];
                if lang != "en" {
                    output.push(("en".to_string(), Vec::new()));
                }
                return Ok(format_expansion(&output));
            }
        }
        Err(BackendError::Unsupported(call.chars().take(60).collect()))
    }
}

//! Chat-model driven `clean` and `expand` calls.
//!
//! Prompts are pseudo function calls (`clean(1, "sl", [...])`) answered with
//! a JSON payload. Few-shot examples are alternating user/assistant turns
//! after the system prompt.

mod backend;
mod batch;
mod cost;
mod prompt;
mod response;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::EntryKey;

pub use backend::{
    price_per_1k, BackendError, ChatBackend, HttpBackend, HttpBackendConfig, IdentityBackend,
    API_KEY_ENV,
};
pub use batch::{run_batch, BatchError, BatchJob, BatchLimits, BatchReport, CheckpointRecord, JobResult};
pub use cost::{estimate_cost, estimate_tokens, CharsPerToken, TokenEstimator};
pub use prompt::{
    build_clean_prompt, build_expand_prompt, clean_system_prompt, expand_system_prompt,
    fixed_clean_examples, fixed_expand_examples, format_clean_call, format_expand_call,
    format_expansion, format_string_list, CleanExample, ExpandExample, FewShotStrategy,
    StrategyLevel,
};
pub use response::{parse_clean_response, parse_clean_response_strict, parse_expand_response, ExpansionResult, ResponseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self::new(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(Role::Assistant, content)
    }

    fn new(role: Role, content: impl Into<String>) -> Self {
        let content = content.into();
        debug_assert!(!content.is_empty(), "chat messages carry content");
        Self { role, content }
    }
}

impl fmt::Display for ChatMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let role = match self.role {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        };
        write!(f, "[{role}] {}", self.content)
    }
}

/// Arguments of one `clean` call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanRequest {
    pub num_signs: usize,
    pub language: Option<String>,
    terms: Vec<String>,
    /// Entry being cleaned; its own gold example is never shown as a shot.
    pub origin: Option<EntryKey>,
}

impl CleanRequest {
    /// `None` when `terms` is empty: there is nothing to clean.
    pub fn new(num_signs: usize, language: Option<String>, terms: Vec<String>) -> Option<Self> {
        (!terms.is_empty()).then_some(Self {
            num_signs,
            language,
            terms,
            origin: None,
        })
    }

    pub fn with_origin(mut self, origin: EntryKey) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// Arguments of one `expand` call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandRequest {
    pub language: String,
    pub terms: Vec<String>,
}

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use super::{ChatMessage, CleanRequest, ExpandRequest};
use crate::corpus::EntryKey;

const CLEAN_SYSTEM: &str = include_str!("../../resources/clean_system.txt");
const EXPAND_SYSTEM: &str = include_str!("../../resources/expand_system.txt");
const CLEAN_EXAMPLES: &str = include_str!("../../resources/clean_examples.json");
const EXPAND_EXAMPLES: &str = include_str!("../../resources/expand_examples.json");

/// Most same-puddle examples shown to the model.
pub const MAX_PUDDLE_EXAMPLES: usize = 5;

pub fn clean_system_prompt() -> &'static str {
    CLEAN_SYSTEM.trim_end()
}

pub fn expand_system_prompt() -> &'static str {
    EXPAND_SYSTEM.trim_end()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanExample {
    pub num_signs: usize,
    pub language: Option<String>,
    pub terms: Vec<String>,
    pub output: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<EntryKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandExample {
    pub language: String,
    pub terms: Vec<String>,
    /// Output keys in display order.
    pub output: Vec<(String, Vec<String>)>,
}

static FIXED_CLEAN: LazyLock<Vec<CleanExample>> =
    LazyLock::new(|| serde_json::from_str(CLEAN_EXAMPLES).expect("shipped clean examples parse"));
static FIXED_EXPAND: LazyLock<Vec<ExpandExample>> =
    LazyLock::new(|| serde_json::from_str(EXPAND_EXAMPLES).expect("shipped expand examples parse"));

/// The four hand-picked cross-puddle cleaning examples.
pub fn fixed_clean_examples() -> &'static [CleanExample] {
    &FIXED_CLEAN
}

/// The nine fixed expansion examples.
pub fn fixed_expand_examples() -> &'static [ExpandExample] {
    &FIXED_EXPAND
}

/// JSON-quoted strings joined by `", "`, e.g. `["Koreja", "Korea"]`.
pub fn format_string_list<S: AsRef<str>>(items: &[S]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| quote(s.as_ref())).collect();
    format!("[{}]", quoted.join(", "))
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// `clean(<n>, "<lang>", [...])`; a missing language is written as `null`.
pub fn format_clean_call<S: AsRef<str>>(num_signs: usize, language: Option<&str>, terms: &[S]) -> String {
    let language = language.map(quote).unwrap_or_else(|| "null".to_string());
    format!("clean({num_signs}, {language}, {})", format_string_list(terms))
}

pub fn format_expand_call<S: AsRef<str>>(language: &str, terms: &[S]) -> String {
    format!("expand({}, {})", quote(language), format_string_list(terms))
}

/// `{"sl": [...], "en": [...]}` with keys in the given order.
pub fn format_expansion(output: &[(String, Vec<String>)]) -> String {
    let fields: Vec<String> = output
        .iter()
        .map(|(k, v)| format!("{}: {}", quote(k), format_string_list(v)))
        .collect();
    format!("{{{}}}", fields.join(", "))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StrategyLevel {
    /// Rules only; no model call.
    E1,
    /// Fixed cross-puddle examples.
    #[default]
    E2,
    /// Up to five examples from the entry's own puddle.
    E3,
    /// Fixed examples followed by same-puddle examples.
    E4,
}

impl StrategyLevel {
    pub fn uses_model(self) -> bool {
        self != StrategyLevel::E1
    }
}

impl fmt::Display for StrategyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyLevel::E1 => "e1",
            StrategyLevel::E2 => "e2",
            StrategyLevel::E3 => "e3",
            StrategyLevel::E4 => "e4",
        })
    }
}

impl FromStr for StrategyLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "e1" => Ok(StrategyLevel::E1),
            "e2" => Ok(StrategyLevel::E2),
            "e3" => Ok(StrategyLevel::E3),
            "e4" => Ok(StrategyLevel::E4),
            other => Err(format!("unknown strategy {other:?} (expected e1..e4)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShotStrategy {
    pub level: StrategyLevel,
    pub fixed_examples: Vec<CleanExample>,
    /// Gold examples per puddle, in gold-file order.
    pub puddle_pool: BTreeMap<u32, Vec<CleanExample>>,
    pub k_puddle: usize,
}

impl FewShotStrategy {
    pub fn new(level: StrategyLevel) -> Self {
        Self {
            level,
            fixed_examples: fixed_clean_examples().to_vec(),
            puddle_pool: BTreeMap::new(),
            k_puddle: MAX_PUDDLE_EXAMPLES,
        }
    }

    pub fn with_pool(mut self, pool: BTreeMap<u32, Vec<CleanExample>>) -> Self {
        self.puddle_pool = pool;
        self
    }

    /// Examples shown for `request`, excluding the request's own gold pair.
    pub fn examples_for(&self, request: &CleanRequest) -> Vec<&CleanExample> {
        let fixed = matches!(self.level, StrategyLevel::E2 | StrategyLevel::E4);
        let same_puddle = matches!(self.level, StrategyLevel::E3 | StrategyLevel::E4);
        let mut out: Vec<&CleanExample> = Vec::new();
        if fixed {
            out.extend(self.fixed_examples.iter());
        }
        if same_puddle {
            if let Some(origin) = request.origin {
                let pool = self.puddle_pool.get(&origin.puddle_id).map(Vec::as_slice).unwrap_or(&[]);
                out.extend(
                    pool.iter()
                        .filter(|ex| ex.origin != Some(origin))
                        .take(self.k_puddle.min(MAX_PUDDLE_EXAMPLES)),
                );
            }
        }
        out
    }
}

pub fn build_clean_prompt(request: &CleanRequest, strategy: &FewShotStrategy) -> Vec<ChatMessage> {
    let mut messages = vec![ChatMessage::system(clean_system_prompt())];
    for ex in strategy.examples_for(request) {
        messages.push(ChatMessage::user(format_clean_call(
            ex.num_signs,
            ex.language.as_deref(),
            &ex.terms,
        )));
        messages.push(ChatMessage::assistant(format_string_list(&ex.output)));
    }
    messages.push(ChatMessage::user(format_clean_call(
        request.num_signs,
        request.language.as_deref(),
        request.terms(),
    )));
    messages
}

pub fn build_expand_prompt(request: &ExpandRequest) -> Vec<ChatMessage> {
    let mut messages = vec![ChatMessage::system(expand_system_prompt())];
    for ex in fixed_expand_examples() {
        messages.push(ChatMessage::user(format_expand_call(&ex.language, &ex.terms)));
        messages.push(ChatMessage::assistant(format_expansion(&ex.output)));
    }
    messages.push(ChatMessage::user(format_expand_call(&request.language, &request.terms)));
    messages
}

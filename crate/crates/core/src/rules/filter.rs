use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;

use super::{Action, RuleError, RuleOutcome};
use crate::corpus::Entry;

const DEFAULT_RULES: &str = include_str!("../../resources/rules.toml");

static URL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)https?://|www\.").unwrap());

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    verse_prefixes: Vec<String>,
    #[serde(default = "yes")]
    drop_urls: bool,
    #[serde(default)]
    puddle: BTreeMap<String, RawPuddle>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPuddle {
    #[serde(default)]
    strip_suffix: Vec<String>,
    #[serde(default)]
    remove_containing: Vec<String>,
    #[serde(default)]
    remove_prefix: Vec<String>,
    #[serde(default)]
    remove_equal: Vec<String>,
    #[serde(default)]
    remove_matching: Vec<String>,
    #[serde(default)]
    remove_full_match: Vec<String>,
    #[serde(default)]
    drop_last_if_in: Vec<String>,
}

#[derive(Debug, Clone)]
enum TermTest {
    Containing(String),
    Prefix(String),
    Equal(String),
    Matching(Regex),
}

impl TermTest {
    fn hits(&self, term: &str) -> bool {
        match self {
            TermTest::Containing(s) => term.contains(s.as_str()),
            TermTest::Prefix(s) => term.starts_with(s.as_str()),
            TermTest::Equal(s) => term == s,
            TermTest::Matching(re) => re.is_match(term),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PuddleFilter {
    strip_suffix: Vec<Regex>,
    remove: Vec<TermTest>,
    drop_last_if_in: Vec<String>,
}

/// Compiled rule configuration: global URL removal plus per-puddle filters.
/// The default is the shipped rule set.
#[derive(Debug, Clone)]
pub struct FilterConfig {
    pub drop_urls: bool,
    pub verse_prefixes: Vec<String>,
    puddles: BTreeMap<u32, PuddleFilter>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self::builtin()
    }
}

impl FilterConfig {
    /// The shipped rule set.
    pub fn builtin() -> Self {
        Self::from_toml(DEFAULT_RULES).expect("shipped rules are valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, RuleError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| RuleError::Config(e.to_string()))?;
        let mut puddles = BTreeMap::new();
        for (id, p) in raw.puddle {
            let id: u32 = id
                .parse()
                .map_err(|_| RuleError::Config(format!("puddle section {id:?} is not an integer id")))?;
            let compile = |pattern: &str, anchored: bool| {
                let src = if anchored { format!("^(?:{pattern})$") } else { pattern.to_string() };
                Regex::new(&src).map_err(|e| RuleError::Config(format!("puddle {id}: {e}")))
            };
            let mut remove = Vec::new();
            remove.extend(p.remove_containing.into_iter().map(TermTest::Containing));
            remove.extend(p.remove_prefix.into_iter().map(TermTest::Prefix));
            remove.extend(p.remove_equal.into_iter().map(TermTest::Equal));
            for re in &p.remove_matching {
                remove.push(TermTest::Matching(compile(re, false)?));
            }
            for re in &p.remove_full_match {
                remove.push(TermTest::Matching(compile(re, true)?));
            }
            let strip_suffix = p
                .strip_suffix
                .iter()
                .map(|re| compile(re, false))
                .collect::<Result<_, _>>()?;
            puddles.insert(
                id,
                PuddleFilter {
                    strip_suffix,
                    remove,
                    drop_last_if_in: p.drop_last_if_in,
                },
            );
        }
        Ok(Self {
            drop_urls: raw.drop_urls,
            verse_prefixes: raw.verse_prefixes.into_iter().filter(|p| !p.is_empty()).collect(),
            puddles,
        })
    }

    pub fn puddle_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.puddles.keys().copied()
    }

    pub fn strip_suffix(&self, puddle_id: u32, term: &str) -> String {
        let mut out = term.to_string();
        if let Some(p) = self.puddles.get(&puddle_id) {
            for re in &p.strip_suffix {
                out = re.replace(&out, "").into_owned();
            }
        }
        out
    }
}

pub fn is_url_term(term: &str) -> bool {
    URL.is_match(term)
}

/// Global URL removal, then the entry's puddle filter. Terms are dropped
/// individually; the entry itself always survives.
pub fn filter_terms(entry: &Entry, config: &FilterConfig) -> RuleOutcome {
    let mut fired = Vec::new();
    let mut terms = entry.terms.clone();
    if config.drop_urls {
        let before = terms.len();
        terms.retain(|t| !is_url_term(t));
        if terms.len() != before {
            fired.push("filter:url".to_string());
        }
    }
    if let Some(p) = config.puddles.get(&entry.key.puddle_id) {
        let before = terms.clone();
        if !p.strip_suffix.is_empty() {
            terms = terms
                .iter()
                .map(|t| config.strip_suffix(entry.key.puddle_id, t))
                .filter(|t| !t.trim().is_empty())
                .collect();
        }
        terms.retain(|t| !p.remove.iter().any(|test| test.hits(t)));
        if terms.last().is_some_and(|t| p.drop_last_if_in.iter().any(|w| w == t.trim())) {
            terms.pop();
        }
        if terms != before {
            fired.push(format!("filter:puddle{}", entry.key.puddle_id));
        }
    }
    if fired.is_empty() {
        RuleOutcome::unchanged()
    } else {
        RuleOutcome {
            action: Action::Keep(terms),
            rule_id: Some(fired.join("+")),
        }
    }
}

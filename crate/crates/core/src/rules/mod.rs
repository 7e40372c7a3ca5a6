//! Deterministic annotation and filtering rules, keyed by puddle.
//!
//! Annotation rules settle an entry outright (its terms become final, or it
//! is dropped). Entries no annotation rule claims go through the term
//! filters instead.

mod bible;
mod filter;

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Entry, EntryKey, Provenance};

pub use bible::{parse_bible_reference, BibleRef, VerseStore};
pub use filter::{filter_terms, is_url_term, FilterConfig};

pub const QUESTION_MARK_FSW: &str = "M510x517S29f0c491x484";
pub const KOREAN_PUDDLE: u32 = 78;
pub const SLOVENE_PUDDLE: u32 = 52;
pub const BIBLE_PUDDLES: [u32; 2] = [151, 152];

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule configuration: {0}")]
    Config(String),
    #[error("verse store line {line}: {reason}")]
    VerseStore { line: usize, reason: String },
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "terms", rename_all = "snake_case")]
pub enum Action {
    Annotate(Vec<String>),
    DropEntry,
    Keep(Vec<String>),
    Unchanged,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleOutcome {
    pub action: Action,
    /// Set whenever `action` is not `Unchanged`.
    pub rule_id: Option<String>,
}

impl RuleOutcome {
    pub fn unchanged() -> Self {
        Self {
            action: Action::Unchanged,
            rule_id: None,
        }
    }

    fn fired(rule_id: &str, action: Action) -> Self {
        Self {
            action,
            rule_id: Some(rule_id.to_string()),
        }
    }

    pub fn is_annotation(&self) -> bool {
        matches!(self.action, Action::Annotate(_))
    }
}

/// One JSON line of the outcome log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub entry_id: EntryKey,
    pub rule_id: Option<String>,
    #[serde(flatten)]
    pub action: Action,
}

pub fn rule_question_mark(entry: &Entry) -> RuleOutcome {
    if entry.fsw.to_string() == QUESTION_MARK_FSW {
        RuleOutcome::fired("question_mark", Action::DropEntry)
    } else {
        RuleOutcome::unchanged()
    }
}

static NUMBERED_WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(.*?\S)\s*\d+\s*$").unwrap());

/// Four terms shaped `identifier, "<word> <number>", extra, "."`: annotate
/// with the word.
pub fn rule_korean(entry: &Entry) -> RuleOutcome {
    if entry.key.puddle_id != KOREAN_PUDDLE || entry.terms.len() != 4 {
        return RuleOutcome::unchanged();
    }
    let t = &entry.terms;
    let identifier = t[0].trim();
    if identifier.is_empty() || identifier.contains(char::is_whitespace) {
        return RuleOutcome::unchanged();
    }
    if t[2].trim().is_empty() || t[3].trim() != "." {
        return RuleOutcome::unchanged();
    }
    match NUMBERED_WORD.captures(&t[1]) {
        Some(caps) if caps[1].chars().any(|c| !c.is_ascii_digit()) => {
            RuleOutcome::fired("korean", Action::Annotate(vec![caps[1].trim().to_string()]))
        }
        _ => RuleOutcome::unchanged(),
    }
}

static VARIATION_SOURCE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(\S+)(?:\s+[A-Z])?\s*\([^()]+\)\s*$").unwrap());

/// A single one-word term with optional variation letter and a
/// parenthesized source: annotate with the bare word.
pub fn rule_slovene(entry: &Entry) -> RuleOutcome {
    if entry.key.puddle_id != SLOVENE_PUDDLE || entry.terms.len() != 1 {
        return RuleOutcome::unchanged();
    }
    match VARIATION_SOURCE.captures(&entry.terms[0]) {
        Some(caps) => RuleOutcome::fired("slovene", Action::Annotate(vec![caps[1].to_string()])),
        None => RuleOutcome::unchanged(),
    }
}

/// Replaces the terms with the referenced verse when exactly one single-verse
/// reference is found and the store knows it.
pub fn rule_bible(entry: &Entry, store: &VerseStore, verse_prefixes: &[String]) -> RuleOutcome {
    if !BIBLE_PUDDLES.contains(&entry.key.puddle_id) {
        return RuleOutcome::unchanged();
    }
    let mut refs: Vec<BibleRef> = entry.terms.iter().filter_map(|t| parse_bible_reference(t)).collect();
    refs.sort();
    refs.dedup();
    let [reference] = refs.as_slice() else {
        return RuleOutcome::unchanged();
    };
    let Some(texts) = store.get(reference) else {
        return RuleOutcome::unchanged();
    };
    let fsw = entry.fsw.to_string();
    let numbered = verse_prefixes.iter().any(|p| !p.is_empty() && fsw.starts_with(p.as_str()));
    let terms = texts
        .iter()
        .map(|t| {
            if numbered {
                format!("Verse {}: {t}", reference.verse)
            } else {
                t.clone()
            }
        })
        .collect();
    RuleOutcome::fired("bible", Action::Annotate(terms))
}

/// Rule set for one pass over a corpus.
#[derive(Debug, Clone, Default)]
pub struct RuleEngine {
    pub filters: FilterConfig,
    pub verses: VerseStore,
}

impl RuleEngine {
    pub fn new(filters: FilterConfig, verses: VerseStore) -> Self {
        Self { filters, verses }
    }

    /// Exactly one outcome: drop, annotation, or term filtering.
    pub fn apply(&self, entry: &Entry) -> RuleOutcome {
        let annotators = [
            rule_question_mark(entry),
            rule_korean(entry),
            rule_slovene(entry),
            rule_bible(entry, &self.verses, &self.filters.verse_prefixes),
        ];
        annotators
            .into_iter()
            .find(|o| o.action != Action::Unchanged)
            .unwrap_or_else(|| filter_terms(entry, &self.filters))
    }

    /// Applies the rules to every entry. Returns the rewritten corpus and one
    /// outcome record per input entry, in corpus order.
    pub fn apply_corpus(&self, corpus: Corpus) -> (Corpus, Vec<OutcomeRecord>) {
        let mut log = Vec::with_capacity(corpus.len());
        let mut kept = Vec::with_capacity(corpus.len());
        for mut entry in corpus.into_entries() {
            let outcome = self.apply(&entry);
            match &outcome.action {
                Action::DropEntry => {}
                Action::Annotate(terms) | Action::Keep(terms) => {
                    entry.terms = terms.clone();
                    kept.push(entry.clone());
                }
                Action::Unchanged => kept.push(entry.clone()),
            }
            log.push(OutcomeRecord {
                entry_id: entry.key,
                rule_id: outcome.rule_id,
                action: outcome.action,
            });
        }
        let corpus = Corpus::new(kept, Provenance::Cleaned).expect("keys unchanged");
        (corpus, log)
    }
}

pub fn outcome_log_jsonl(records: &[OutcomeRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}

pub fn parse_outcome_log(text: &str) -> Result<Vec<OutcomeRecord>, RuleError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| RuleError::Config(format!("outcome log record {}: {e}", i + 1))))
        .collect()
}

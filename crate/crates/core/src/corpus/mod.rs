//! SignBank-style corpora: ingestion, splitting, pair generation and export.

mod export;
mod languages;
mod pairs;
mod split;
mod tsv;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsw::FswSequence;
use crate::llm::ExpansionResult;

pub use export::{export, file_sha256, ExportOptions, Manifest};
pub use languages::LanguageTable;
pub use pairs::{make_pairs, pair_count, Direction, ParallelPair};
pub use split::{split, Split};
pub use tsv::{
    decode_terms, encode_terms, ingest, parse_corpus, parse_entry_keys, write_corpus, IngestReport,
    Reject,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate entry {0}")]
    DuplicateEntry(EntryKey),
    #[error("dev size {requested} exceeds the {available} entries left after the test holdout")]
    DevTooLarge { requested: usize, available: usize },
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct EntryKey {
    pub puddle_id: u32,
    pub entry_id: u64,
}

impl EntryKey {
    pub fn new(puddle_id: u32, entry_id: u64) -> Self {
        Self { puddle_id, entry_id }
    }
}

impl fmt::Display for EntryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.puddle_id, self.entry_id)
    }
}

impl FromStr for EntryKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (p, e) = s.split_once(':').ok_or_else(|| format!("bad entry key {s:?}"))?;
        Ok(Self {
            puddle_id: p.parse().map_err(|_| format!("bad puddle id in {s:?}"))?,
            entry_id: e.parse().map_err(|_| format!("bad entry id in {s:?}"))?,
        })
    }
}

/// One record: a signed sequence and its spoken-language candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: EntryKey,
    /// Spoken language code of the puddle.
    pub language: String,
    pub fsw: FswSequence,
    pub terms: Vec<String>,
    /// English renderings added by expansion, paired under the `en` tag.
    pub english_terms: Vec<String>,
}

impl Entry {
    pub fn new(key: EntryKey, language: impl Into<String>, fsw: FswSequence, terms: Vec<String>) -> Self {
        Self {
            key,
            language: language.into(),
            fsw,
            terms,
            english_terms: Vec::new(),
        }
    }

    pub fn term_count(&self) -> usize {
        self.terms.len() + self.english_terms.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Original,
    Cleaned,
    Expanded,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Original => "original",
            Provenance::Cleaned => "cleaned",
            Provenance::Expanded => "expanded",
        })
    }
}

/// Entries ordered by `(puddle_id, entry_id)`, keys unique.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    entries: Vec<Entry>,
    pub provenance: Provenance,
}

impl Corpus {
    pub fn new(mut entries: Vec<Entry>, provenance: Provenance) -> Result<Self, CorpusError> {
        entries.sort_by_key(|e| e.key);
        if let Some(pair) = entries.windows(2).find(|w| w[0].key == w[1].key) {
            return Err(CorpusError::DuplicateEntry(pair[0].key));
        }
        Ok(Self { entries, provenance })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: EntryKey) -> Option<&Entry> {
        self.entries
            .binary_search_by_key(&key, |e| e.key)
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Rewrites every entry in place; keys must not change.
    pub fn map_entries(self, mut f: impl FnMut(Entry) -> Entry, provenance: Provenance) -> Self {
        let entries = self
            .entries
            .into_iter()
            .map(|e| {
                let key = e.key;
                let out = f(e);
                assert_eq!(out.key, key, "entry keys are immutable");
                out
            })
            .collect();
        Self { entries, provenance }
    }

    pub fn retain(&mut self, f: impl FnMut(&Entry) -> bool) {
        self.entries.retain(f);
    }

    pub fn into_entries(self) -> Vec<Entry> {
        self.entries
    }

    pub fn total_terms(&self) -> usize {
        self.entries.iter().map(Entry::term_count).sum()
    }
}

/// Replaces each entry's terms with its native expansion and attaches the
/// English expansion. Entries without a result, or with an empty one, keep
/// their current terms.
pub fn apply_expansion(corpus: Corpus, results: &BTreeMap<EntryKey, ExpansionResult>) -> Corpus {
    corpus.map_entries(
        |mut entry| {
            if let Some(result) = results.get(&entry.key) {
                if !result.is_empty() {
                    let is_english = entry.language == "en";
                    let mut native = Vec::new();
                    let mut english = Vec::new();
                    for term in &result.native {
                        push_unique(&mut native, term);
                    }
                    for term in &result.english {
                        if is_english {
                            push_unique(&mut native, term);
                        } else {
                            push_unique(&mut english, term);
                        }
                    }
                    entry.terms = native;
                    entry.english_terms = english;
                }
            }
            entry
        },
        Provenance::Expanded,
    )
}

pub(crate) fn push_unique(list: &mut Vec<String>, term: &str) {
    if !term.is_empty() && !list.iter().any(|t| t == term) {
        list.push(term.to_string());
    }
}

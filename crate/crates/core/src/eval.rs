//! Intersection-over-Union between predicted and gold term sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{decode_terms, EntryKey};

/// Trimmed, deduplicated, case-sensitive terms. Empty strings are dropped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TermSet(BTreeSet<String>);

impl TermSet {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(
            terms
                .into_iter()
                .map(|t| t.as_ref().trim().to_string())
                .filter(|t| !t.is_empty())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl<S: AsRef<str>> FromIterator<S> for TermSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TermSet::new(iter)
    }
}

/// `|pred ∩ gold| / |pred ∪ gold|`, with two empty sets scoring 1.
pub fn iou(pred: &TermSet, gold: &TermSet) -> f64 {
    let inter = pred.0.intersection(&gold.0).count();
    let union = pred.len() + gold.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("prediction and gold entries differ (missing predictions: {missing:?}, extra predictions: {extra:?})")]
    KeyMismatch {
        missing: Vec<EntryKey>,
        extra: Vec<EntryKey>,
    },
    #[error("nothing to evaluate")]
    Empty,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryScore {
    pub entry: EntryKey,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PuddleScore {
    pub puddle_id: u32,
    pub entries: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IoUReport {
    pub per_entry: Vec<EntryScore>,
    pub mean: f64,
    pub per_puddle: Vec<PuddleScore>,
}

impl IoUReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>8}  {:>7}  {:>6}", "puddle", "entries", "iou");
        for p in &self.per_puddle {
            let _ = writeln!(out, "{:>8}  {:>7}  {:>6.4}", p.puddle_id, p.entries, p.mean);
        }
        let _ = writeln!(out, "{:>8}  {:>7}  {:>6.4}", "all", self.per_entry.len(), self.mean);
        out
    }
}

/// Scores every entry and averages without weighting. Key sets must match.
pub fn mean_iou(
    predictions: &BTreeMap<EntryKey, TermSet>,
    gold: &BTreeMap<EntryKey, TermSet>,
) -> Result<IoUReport, EvalError> {
    let missing: Vec<EntryKey> = gold.keys().filter(|k| !predictions.contains_key(k)).copied().collect();
    let extra: Vec<EntryKey> = predictions.keys().filter(|k| !gold.contains_key(k)).copied().collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(EvalError::KeyMismatch { missing, extra });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let per_entry: Vec<EntryScore> = gold
        .iter()
        .map(|(key, g)| EntryScore {
            entry: *key,
            iou: iou(&predictions[key], g),
        })
        .collect();
    let mean = per_entry.iter().map(|s| s.iou).sum::<f64>() / per_entry.len() as f64;

    let mut by_puddle: BTreeMap<u32, (usize, f64)> = BTreeMap::new();
    for s in &per_entry {
        let slot = by_puddle.entry(s.entry.puddle_id).or_default();
        slot.0 += 1;
        slot.1 += s.iou;
    }
    let per_puddle = by_puddle
        .into_iter()
        .map(|(puddle_id, (n, sum))| PuddleScore {
            puddle_id,
            entries: n,
            mean: sum / n as f64,
        })
        .collect();
    Ok(IoUReport {
        per_entry,
        mean,
        per_puddle,
    })
}

/// Reads `puddle_id<TAB>entry_id<TAB>term1||term2||...`; an empty or absent
/// third column is the empty set.
pub fn parse_term_sets(text: &str) -> Result<BTreeMap<EntryKey, TermSet>, EvalError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| EvalError::Parse { line: i + 1, reason };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 || cols.len() > 3 {
            return Err(err(format!("expected 2 or 3 columns, found {}", cols.len())));
        }
        let key = EntryKey {
            puddle_id: cols[0].trim().parse().map_err(|_| err(format!("bad puddle id {:?}", cols[0])))?,
            entry_id: cols[1].trim().parse().map_err(|_| err(format!("bad entry id {:?}", cols[1])))?,
        };
        let terms = decode_terms(cols.get(2).copied().unwrap_or("")).map_err(err)?;
        if out.insert(key, TermSet::new(terms)).is_some() {
            return Err(err(format!("duplicate entry {key}")));
        }
    }
    Ok(out)
}

//! Generators, a scripted fake model and brute-force oracles shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::Rng;
use regex::Regex;
use serde_json::Value;

use signbank::corpus::{Corpus, Entry, EntryKey, Provenance};
use signbank::fsw::{BoxKind, Coordinate, FswSequence, FswSign, PlacedSymbol, SequenceItem, SymbolId};
use signbank::llm::{format_expansion, format_string_list, BackendError, ChatBackend, ChatMessage, Role};

pub fn coordinate(rng: &mut impl Rng) -> Coordinate {
    Coordinate::new(rng.gen_range(250..=749), rng.gen_range(250..=749)).unwrap()
}

fn boxed_symbol_id(rng: &mut impl Rng) -> SymbolId {
    let base = loop {
        let b = rng.gen_range(0x100..=0x38f);
        if !(0x387..=0x38b).contains(&b) {
            break b;
        }
    };
    SymbolId::new(base, rng.gen_range(0..=5), rng.gen_range(0..=15)).unwrap()
}

pub fn sign(rng: &mut impl Rng, with_prefix: bool) -> FswSign {
    let symbols = (0..rng.gen_range(0..=6))
        .map(|_| PlacedSymbol {
            id: boxed_symbol_id(rng),
            at: coordinate(rng),
        })
        .collect();
    let sort_prefix = (with_prefix && rng.gen_bool(0.3)).then(|| {
        (0..rng.gen_range(1..=3))
            .map(|_| SymbolId::new(rng.gen_range(0x100..=0x38f), rng.gen_range(0..=5), rng.gen_range(0..=15)).unwrap())
            .collect()
    });
    FswSign {
        sort_prefix,
        box_kind: *BoxKind::ALL.choose(rng).unwrap(),
        max: coordinate(rng),
        symbols,
    }
}

/// Canonical sequence: signs with occasional standalone punctuation.
pub fn sequence(rng: &mut impl Rng, with_prefix: bool) -> FswSequence {
    let items = (0..rng.gen_range(1..=4))
        .map(|_| {
            if rng.gen_bool(0.15) {
                SequenceItem::Punctuation(PlacedSymbol {
                    id: SymbolId::new(rng.gen_range(0x387..=0x38b), rng.gen_range(0..=5), rng.gen_range(0..=15)).unwrap(),
                    at: coordinate(rng),
                })
            } else {
                SequenceItem::Sign(sign(rng, with_prefix))
            }
        })
        .collect();
    FswSequence::new(items)
}

pub const WORDS: [&str; 20] = [
    "hello", "Hello", "cookie", "biscuit", "tre", "Three", "3", "Vater", "father", "zdarma",
    "Koreja", "Korea", "house", "maison", "Haus", "one", "1", "dog", "chien", "Hund",
];

pub fn terms(rng: &mut impl Rng, max: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for _ in 0..rng.gen_range(0..=max) {
        let w = WORDS.choose(rng).unwrap().to_string();
        if !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

pub const LANGUAGES: [&str; 5] = ["en", "de", "sv", "fr", "sl"];

/// Random corpus over a handful of puddles with distinct keys.
pub fn corpus(rng: &mut impl Rng, n: usize) -> Corpus {
    let puddles = [4u32, 11, 16, 47, 52, 53, 78, 151];
    let mut keys = BTreeSet::new();
    while keys.len() < n {
        keys.insert(EntryKey::new(*puddles.choose(rng).unwrap(), rng.gen_range(1..100_000)));
    }
    let entries = keys
        .into_iter()
        .map(|key| {
            Entry::new(
                key,
                *LANGUAGES.choose(rng).unwrap(),
                sequence(rng, true),
                terms(rng, 4),
            )
        })
        .collect();
    Corpus::new(entries, Provenance::Original).unwrap()
}

/// Independent acceptor for FSW sequence text, written against the grammar
/// with a regex plus numeric range checks.
pub struct FswOracle {
    sign: Regex,
    punct: Regex,
    prefix_sym: Regex,
    placed: Regex,
}

impl Default for FswOracle {
    fn default() -> Self {
        Self {
            sign: Regex::new(r"^(?:A((?:S[0-9a-fA-F]{5})+))?[BLMR](\d{3})x(\d{3})((?:S[0-9a-fA-F]{5}\d{3}x\d{3})*)$").unwrap(),
            punct: Regex::new(r"^S([0-9a-fA-F]{5})(\d{3})x(\d{3})$").unwrap(),
            prefix_sym: Regex::new(r"S([0-9a-fA-F]{5})").unwrap(),
            placed: Regex::new(r"S([0-9a-fA-F]{5})(\d{3})x(\d{3})").unwrap(),
        }
    }
}

fn id_ok(hex5: &str) -> Option<(u16, bool)> {
    let base = u16::from_str_radix(&hex5[..3], 16).ok()?;
    let fill = u8::from_str_radix(&hex5[3..4], 16).ok()?;
    ((0x100..=0x38f).contains(&base) && fill <= 5).then_some((base, (0x387..=0x38b).contains(&base)))
}

fn coord_ok(x: &str, y: &str) -> bool {
    let ok = |s: &str| s.parse::<u16>().is_ok_and(|v| (250..=749).contains(&v));
    ok(x) && ok(y)
}

impl FswOracle {
    pub fn accepts(&self, text: &str) -> bool {
        text.is_empty() || text.split(' ').all(|f| self.fragment(f))
    }

    fn fragment(&self, f: &str) -> bool {
        if let Some(c) = self.punct.captures(f) {
            return id_ok(&c[1]).is_some_and(|(_, p)| p) && coord_ok(&c[2], &c[3]);
        }
        let Some(c) = self.sign.captures(f) else { return false };
        if let Some(prefix) = c.get(1) {
            if !self.prefix_sym.captures_iter(prefix.as_str()).all(|s| id_ok(&s[1]).is_some()) {
                return false;
            }
        }
        coord_ok(&c[2], &c[3])
            && self
                .placed
                .captures_iter(&c[4])
                .all(|s| id_ok(&s[1]).is_some_and(|(_, p)| !p) && coord_ok(&s[2], &s[3]))
    }
}

/// Deterministic stand-in for a chat model.
///
/// `clean` keeps terms without digits, capitalized; `expand` answers the
/// native list plus a lowercase variant and an English list of uppercased
/// terms. Every `fail_every`-th call (counting from 1) fails.
pub struct ScriptedBackend {
    pub calls: AtomicUsize,
    pub fail_every: Option<usize>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self {
            calls: AtomicUsize::new(0),
            fail_every: None,
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

fn args(call: &str, name: &str) -> Option<Vec<Value>> {
    let inner = call.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?;
    serde_json::from_str(&format!("[{inner}]")).ok()
}

fn strings(v: &Value) -> Vec<String> {
    v.as_array()
        .into_iter()
        .flatten()
        .filter_map(Value::as_str)
        .map(str::to_string)
        .collect()
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

impl ChatBackend for ScriptedBackend {
    fn model_name(&self) -> &str {
        "scripted"
    }

    fn price_per_1k_tokens(&self) -> f64 {
        0.0015
    }

    fn send(&self, messages: &[ChatMessage]) -> Result<String, BackendError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
        if self.fail_every.is_some_and(|k| n.is_multiple_of(k)) {
            return Err(BackendError::RateLimited);
        }
        let call = &messages.iter().rev().find(|m| m.role == Role::User).unwrap().content;
        if let Some(a) = args(call, "clean") {
            let kept: Vec<String> = strings(&a[2])
                .iter()
                .filter(|t| !t.chars().any(|c| c.is_ascii_digit()))
                .map(|t| capitalize(t))
                .collect();
            return Ok(format!("Here you go: {}", format_string_list(&kept)));
        }
        if let Some(a) = args(call, "expand") {
            let lang = a[0].as_str().unwrap().to_string();
            let terms = strings(&a[1]);
            let mut native = terms.clone();
            native.extend(terms.iter().map(|t| t.to_lowercase()));
            let english = terms.iter().map(|t| t.to_uppercase()).collect();
            let mut out = vec![(lang.clone(), native)];
            if lang != "en" {
                out.push(("en".into(), english));
            }
            return Ok(format_expansion(&out));
        }
        Err(BackendError::Unsupported(call.clone()))
    }
}

/// Per-entry IoU by plain set arithmetic, then the unweighted mean.
pub fn oracle_mean_iou(pred: &BTreeMap<EntryKey, Vec<String>>, gold: &BTreeMap<EntryKey, Vec<String>>) -> f64 {
    let mut total = 0.0;
    for (key, g) in gold {
        let p: BTreeSet<&str> = pred[key].iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
        let g: BTreeSet<&str> = g.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
        let inter = p.iter().filter(|t| g.contains(*t)).count();
        let union = p.len() + g.len() - inter;
        total += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    }
    total / gold.len() as f64
}

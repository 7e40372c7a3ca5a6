use std::collections::HashSet;
use std::path::Path;

use super::{Corpus, CorpusError, Entry, EntryKey, Provenance};
use crate::fsw::{parse_sequence_with, ParseMode};

const SEPARATOR: &str = "||";

/// Joins terms with `||`. Backslash, pipe, tab, CR and LF are escaped so
/// every term list survives a round trip through one TSV field.
pub fn encode_terms<S: AsRef<str>>(terms: &[S]) -> String {
    let mut out = String::new();
    for (i, term) in terms.iter().enumerate() {
        if i > 0 {
            out.push_str(SEPARATOR);
        }
        for c in term.as_ref().chars() {
            match c {
                '\\' => out.push_str("\\\\"),
                '|' => out.push_str("\\|"),
                '\t' => out.push_str("\\t"),
                '\n' => out.push_str("\\n"),
                '\r' => out.push_str("\\r"),
                c => out.push(c),
            }
        }
    }
    out
}

/// Inverse of [`encode_terms`]. Empty items are dropped, so an empty field
/// is the empty list. A lone unescaped `|` is kept literally.
pub fn decode_terms(field: &str) -> Result<Vec<String>, String> {
    let mut terms = Vec::new();
    let mut current = String::new();
    let mut chars = field.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('\\') => current.push('\\'),
                Some('|') => current.push('|'),
                Some('t') => current.push('\t'),
                Some('n') => current.push('\n'),
                Some('r') => current.push('\r'),
                Some(other) => return Err(format!("unknown escape \\{other}")),
                None => return Err("dangling backslash".into()),
            },
            '|' if chars.peek() == Some(&'|') => {
                chars.next();
                terms.push(std::mem::take(&mut current));
            }
            c => current.push(c),
        }
    }
    terms.push(current);
    terms.retain(|t| !t.is_empty());
    Ok(terms)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
    pub raw: String,
}

impl Reject {
    pub fn to_tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}",
            self.line,
            self.reason.replace(['\t', '\n'], " "),
            encode_terms(&[&self.raw])
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub corpus: Corpus,
    pub rejects: Vec<Reject>,
}

pub fn ingest(path: &Path, provenance: Provenance, mode: ParseMode) -> Result<IngestReport, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_corpus(&text, provenance, mode))
}

/// Parses `puddle_id<TAB>entry_id<TAB>language<TAB>fsw<TAB>terms[<TAB>english_terms]`.
/// Blank lines are skipped; bad rows are collected as rejects.
pub fn parse_corpus(text: &str, provenance: Provenance, mode: ParseMode) -> IngestReport {
    let mut entries = Vec::new();
    let mut rejects = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        match parse_row(line, mode) {
            Ok(entry) if !seen.insert(entry.key) => rejects.push(Reject {
                line: i + 1,
                reason: format!("duplicate entry {}", entry.key),
                raw: line.to_string(),
            }),
            Ok(entry) => entries.push(entry),
            Err(reason) => rejects.push(Reject {
                line: i + 1,
                reason,
                raw: line.to_string(),
            }),
        }
    }
    let corpus = Corpus::new(entries, provenance).expect("duplicates filtered during ingest");
    IngestReport { corpus, rejects }
}

fn parse_row(line: &str, mode: ParseMode) -> Result<Entry, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 5 && cols.len() != 6 {
        return Err(format!("expected 5 or 6 columns, found {}", cols.len()));
    }
    let key = parse_key(cols[0], cols[1])?;
    let language = cols[2].trim();
    if language.is_empty() || language.contains(char::is_whitespace) {
        return Err(format!("bad language code {:?}", cols[2]));
    }
    let fsw = parse_sequence_with(cols[3], mode).map_err(|e| format!("bad fsw: {e}"))?;
    let terms = decode_terms(cols[4])?;
    let english_terms = match cols.get(5) {
        Some(field) => decode_terms(field)?,
        None => Vec::new(),
    };
    Ok(Entry {
        key,
        language: language.to_string(),
        fsw,
        terms,
        english_terms,
    })
}

fn parse_key(puddle: &str, entry: &str) -> Result<EntryKey, String> {
    let puddle_id = puddle
        .trim()
        .parse()
        .map_err(|_| format!("bad puddle id {puddle:?}"))?;
    let entry_id = entry
        .trim()
        .parse()
        .map_err(|_| format!("bad entry id {entry:?}"))?;
    Ok(EntryKey { puddle_id, entry_id })
}

/// Reads the leading `puddle_id<TAB>entry_id` columns of every non-blank line.
pub fn parse_entry_keys(text: &str) -> Result<Vec<EntryKey>, String> {
    let mut keys = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let (p, e) = (cols.next().unwrap_or(""), cols.next().unwrap_or(""));
        keys.push(parse_key(p, e).map_err(|r| format!("line {}: {r}", i + 1))?);
    }
    Ok(keys)
}

pub fn write_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for e in corpus.entries() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}",
            e.key.puddle_id,
            e.key.entry_id,
            e.language,
            e.fsw,
            encode_terms(&e.terms)
        ));
        if !e.english_terms.is_empty() {
            out.push('\t');
            out.push_str(&encode_terms(&e.english_terms));
        }
        out.push('\n');
    }
    out
}

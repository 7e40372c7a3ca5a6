use std::collections::BTreeMap;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use super::RuleError;

// Book, zero-padded chapter, `v`, zero-padded verse; anything after must be
// separated by whitespace, so partial verses ("03a") and ranges ("03-05") fail.
static REFERENCE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)^([1-3]?[A-Za-z]+)(\d{1,3})v(\d{1,3})(?:\s.*)?$").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BibleRef {
    pub book: String,
    pub chapter: u32,
    pub verse: u32,
}

impl BibleRef {
    pub fn new(book: impl Into<String>, chapter: u32, verse: u32) -> Option<Self> {
        let book = book.into();
        (!book.is_empty() && chapter >= 1 && verse >= 1).then_some(Self { book, chapter, verse })
    }
}

/// Recognizes identifiers such as `1Corinthians01v03` or `Matthew15v07 NLT`.
pub fn parse_bible_reference(term: &str) -> Option<BibleRef> {
    let caps = REFERENCE.captures(term.trim())?;
    BibleRef::new(&caps[1], caps[2].parse().ok()?, caps[3].parse().ok()?)
}

/// Verse texts keyed by reference. A key may hold several renderings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerseStore {
    verses: BTreeMap<BibleRef, Vec<String>>,
}

impl VerseStore {
    /// Reads `book<TAB>chapter<TAB>verse<TAB>text` lines.
    pub fn parse(text: &str) -> Result<Self, RuleError> {
        let mut store = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() {
                continue;
            }
            let bad = |why: &str| RuleError::VerseStore {
                line: i + 1,
                reason: why.to_string(),
            };
            let cols: Vec<&str> = line.splitn(4, '\t').collect();
            if cols.len() != 4 {
                return Err(bad("expected 4 tab-separated columns"));
            }
            let chapter = cols[1].trim().parse().map_err(|_| bad("bad chapter"))?;
            let verse = cols[2].trim().parse().map_err(|_| bad("bad verse"))?;
            let key = BibleRef::new(cols[0].trim(), chapter, verse)
                .ok_or_else(|| bad("book must be non-empty and chapter/verse positive"))?;
            let body = cols[3].trim();
            if body.is_empty() {
                return Err(bad("empty verse text"));
            }
            store.insert(key, body);
        }
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self, RuleError> {
        let text = std::fs::read_to_string(path).map_err(|e| RuleError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn insert(&mut self, key: BibleRef, text: &str) {
        self.verses.entry(key).or_default().push(text.to_string());
    }

    pub fn get(&self, key: &BibleRef) -> Option<&[String]> {
        self.verses.get(key).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.verses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verses.is_empty()
    }
}

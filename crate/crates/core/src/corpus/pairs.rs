use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Entry, LanguageTable};
use crate::tokenizer::{tokenize, tokens_to_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    SignedToSpoken,
    SpokenToSigned,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::SignedToSpoken => "signed_to_spoken",
            Direction::SpokenToSigned => "spoken_to_signed",
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "signed_to_spoken" | "signed-to-spoken" => Ok(Direction::SignedToSpoken),
            "spoken_to_signed" | "spoken-to-signed" => Ok(Direction::SpokenToSigned),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelPair {
    /// `$<signed> $<spoken>` followed by the source text.
    pub source: String,
    pub target: String,
    pub signed_language: String,
    pub spoken_language: String,
}

/// One pair per term. English expansion terms pair under the `en` tag.
pub fn make_pairs(entry: &Entry, direction: Direction, tags: &LanguageTable) -> Vec<ParallelPair> {
    let signed_language = tags.signed_language(entry.key.puddle_id);
    let signed_text = tokens_to_text(&tokenize(&entry.fsw), false);
    let native = entry.terms.iter().map(|t| (entry.language.as_str(), t));
    let english = entry.english_terms.iter().map(|t| ("en", t));
    native
        .chain(english)
        .map(|(spoken_language, term)| {
            let term = single_line(term);
            let (body, target) = match direction {
                Direction::SignedToSpoken => (signed_text.clone(), term),
                Direction::SpokenToSigned => (term, signed_text.clone()),
            };
            ParallelPair {
                source: format!("${signed_language} ${spoken_language} {body}"),
                target,
                signed_language: signed_language.to_string(),
                spoken_language: spoken_language.to_string(),
            }
        })
        .collect()
}

pub fn pair_count<'a>(entries: impl IntoIterator<Item = &'a Entry>) -> usize {
    entries.into_iter().map(Entry::term_count).sum()
}

// Line-aligned output files cannot carry embedded line breaks.
fn single_line(term: &str) -> String {
    term.split(['\n', '\r']).filter(|s| !s.is_empty()).collect::<Vec<_>>().join(" ")
}

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{make_pairs, Corpus, Direction, LanguageTable, Provenance};

#[derive(Debug, Clone)]
pub struct ExportOptions {
    /// Split name used as the file stem, e.g. `train`.
    pub name: String,
    pub direction: Direction,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub direction: Direction,
    pub provenance: Provenance,
    pub entries: usize,
    pub pairs: usize,
    pub source_file: String,
    pub target_file: String,
    pub source_sha256: String,
    pub target_sha256: String,
}

/// `manifest.json`: one record per exported split, merged across calls that
/// share a configuration hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Manifest {
    pub config_hash: String,
    pub splits: BTreeMap<String, SplitManifest>,
}

impl Manifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn read(dir: &Path) -> io::Result<Option<Manifest>> {
        let path = dir.join(Self::FILE_NAME);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

pub fn file_sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `<name>.source.txt` and `<name>.target.txt` (line-aligned, LF) and
/// updates `manifest.json` in `out_dir`.
pub fn export(corpus: &Corpus, options: &ExportOptions, tags: &LanguageTable, out_dir: &Path) -> io::Result<Manifest> {
    fs::create_dir_all(out_dir)?;
    let mut source = Vec::new();
    let mut target = Vec::new();
    let mut pairs = 0usize;
    for entry in corpus.entries() {
        for pair in make_pairs(entry, options.direction, tags) {
            writeln!(source, "{}", pair.source)?;
            writeln!(target, "{}", pair.target)?;
            pairs += 1;
        }
    }
    let source_file = format!("{}.source.txt", options.name);
    let target_file = format!("{}.target.txt", options.name);
    fs::write(out_dir.join(&source_file), &source)?;
    fs::write(out_dir.join(&target_file), &target)?;

    let mut manifest = match Manifest::read(out_dir)? {
        Some(m) if m.config_hash == options.config_hash => m,
        _ => Manifest {
            config_hash: options.config_hash.clone(),
            splits: BTreeMap::new(),
        },
    };
    manifest.splits.insert(
        options.name.clone(),
        SplitManifest {
            direction: options.direction,
            provenance: corpus.provenance,
            entries: corpus.len(),
            pairs,
            source_file,
            target_file,
            source_sha256: file_sha256(&source),
            target_sha256: file_sha256(&target),
        },
    );
    let mut json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    json.push('\n');
    fs::write(out_dir.join(Manifest::FILE_NAME), json)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Entry, EntryKey};
    use crate::fsw::parse_sequence;

    fn options(name: &str) -> ExportOptions {
        ExportOptions {
            name: name.into(),
            direction: Direction::SignedToSpoken,
            config_hash: "abc".into(),
        }
    }

    #[test]
    fn empty_corpus_exports_empty_files() {
        let dir = tempfile::tempdir().unwrap();
        let m = export(&Corpus::default(), &options("train"), &LanguageTable::default(), dir.path()).unwrap();
        assert_eq!(m.splits["train"].pairs, 0);
        assert_eq!(fs::read(dir.path().join("train.source.txt")).unwrap(), b"");
        assert_eq!(fs::read(dir.path().join("train.target.txt")).unwrap(), b"");
        assert_eq!(Manifest::read(dir.path()).unwrap().unwrap(), m);
    }

    #[test]
    fn manifest_merges_splits_and_resets_on_new_config() {
        let dir = tempfile::tempdir().unwrap();
        let entry = Entry::new(
            EntryKey::new(4, 1),
            "en",
            parse_sequence("M500x500").unwrap(),
            vec!["a".into(), "b".into()],
        );
        let corpus = Corpus::new(vec![entry], Provenance::Cleaned).unwrap();
        let tags = LanguageTable::default();
        export(&corpus, &options("train"), &tags, dir.path()).unwrap();
        let m = export(&corpus, &options("dev"), &tags, dir.path()).unwrap();
        assert_eq!(m.splits.len(), 2);
        assert_eq!(m.splits["dev"].pairs, 2);
        let text = fs::read_to_string(dir.path().join("dev.source.txt")).unwrap();
        assert_eq!(text, "$ase $en M p500 p500\n$ase $en M p500 p500\n");
        let mut other = options("dev");
        other.config_hash = "def".into();
        let m = export(&corpus, &other, &tags, dir.path()).unwrap();
        assert_eq!(m.splits.len(), 1);
    }
}

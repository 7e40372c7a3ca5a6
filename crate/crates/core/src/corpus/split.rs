use std::collections::BTreeSet;

use super::{Corpus, CorpusError, EntryKey};

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
}

/// Holds out `test_ids` first, then takes the first `dev_size` remaining
/// entries (in key order) as dev. Everything else is train.
pub fn split(corpus: Corpus, dev_size: usize, test_ids: &BTreeSet<EntryKey>) -> Result<Split, CorpusError> {
    let provenance = corpus.provenance;
    let (test, rest): (Vec<_>, Vec<_>) = corpus
        .into_entries()
        .into_iter()
        .partition(|e| test_ids.contains(&e.key));
    if dev_size > rest.len() {
        return Err(CorpusError::DevTooLarge {
            requested: dev_size,
            available: rest.len(),
        });
    }
    let mut rest = rest;
    let train = rest.split_off(dev_size);
    let build = |entries| Corpus::new(entries, provenance).expect("subset of a valid corpus");
    Ok(Split {
        train: build(train),
        dev: build(rest),
        test: build(test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Entry, Provenance};
    use crate::fsw::FswSequence;

    fn corpus(n: u64) -> Corpus {
        let entries = (1..=n)
            .map(|i| Entry::new(EntryKey::new(1, i), "en", FswSequence::default(), vec![]))
            .collect();
        Corpus::new(entries, Provenance::Cleaned).unwrap()
    }

    fn ids(c: &Corpus) -> Vec<u64> {
        c.entries().iter().map(|e| e.key.entry_id).collect()
    }

    #[test]
    fn dev_is_leading_entries() {
        let s = split(corpus(10), 3, &BTreeSet::new()).unwrap();
        assert_eq!(ids(&s.dev), [1, 2, 3]);
        assert_eq!(ids(&s.train), (4..=10).collect::<Vec<_>>());
        assert!(s.test.is_empty());
        assert_eq!(s.train.provenance, Provenance::Cleaned);
    }

    #[test]
    fn test_ids_are_held_out_first() {
        let test: BTreeSet<_> = [EntryKey::new(1, 2), EntryKey::new(1, 9), EntryKey::new(7, 7)].into();
        let s = split(corpus(10), 3, &test).unwrap();
        assert_eq!(ids(&s.test), [2, 9]);
        assert_eq!(ids(&s.dev), [1, 3, 4]);
        assert_eq!(s.train.len() + s.dev.len() + s.test.len(), 10);
    }

    #[test]
    fn dev_too_large() {
        let test: BTreeSet<_> = [EntryKey::new(1, 1)].into();
        assert!(matches!(
            split(corpus(3), 3, &test),
            Err(CorpusError::DevTooLarge { requested: 3, available: 2 })
        ));
        assert_eq!(split(corpus(3), 3, &BTreeSet::new()).unwrap().dev.len(), 3);
    }
}

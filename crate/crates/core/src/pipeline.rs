//! Corpus-level `clean` and `expand` passes on top of [`run_batch`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::corpus::{apply_expansion, decode_terms, Corpus, EntryKey, Provenance};
use crate::llm::{
    build_clean_prompt, build_expand_prompt, parse_clean_response, parse_expand_response, run_batch,
    BatchError, BatchJob, BatchLimits, BatchReport, ChatBackend, CleanExample, CleanRequest,
    ExpandRequest, ExpansionResult, FewShotStrategy, JobResult,
};
use crate::rules::{Action, OutcomeRecord};

/// Gold annotations in file order: `puddle_id<TAB>entry_id<TAB>term1||term2||...`.
pub fn parse_gold(text: &str) -> Result<Vec<(EntryKey, Vec<String>)>, String> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 || cols.len() > 3 {
            return Err(format!("line {}: expected 2 or 3 columns", i + 1));
        }
        let key: EntryKey = format!("{}:{}", cols[0].trim(), cols[1].trim())
            .parse()
            .map_err(|_| format!("line {}: bad entry id", i + 1))?;
        if !seen.insert(key) {
            return Err(format!("line {}: duplicate entry {key}", i + 1));
        }
        let terms = decode_terms(cols.get(2).copied().unwrap_or("")).map_err(|r| format!("line {}: {r}", i + 1))?;
        out.push((key, terms));
    }
    Ok(out)
}

/// Same-puddle few-shot pool. Gold rows whose entry is missing from `corpus`
/// or has no input terms are skipped.
pub fn gold_pool(gold: &[(EntryKey, Vec<String>)], corpus: &Corpus) -> BTreeMap<u32, Vec<CleanExample>> {
    let mut pool: BTreeMap<u32, Vec<CleanExample>> = BTreeMap::new();
    for (key, output) in gold {
        let Some(entry) = corpus.get(*key) else { continue };
        if entry.terms.is_empty() {
            continue;
        }
        pool.entry(key.puddle_id).or_default().push(CleanExample {
            num_signs: entry.fsw.sign_count(),
            language: Some(entry.language.clone()),
            terms: entry.terms.clone(),
            output: output.clone(),
            origin: Some(*key),
        });
    }
    pool
}

/// Entries a rule already annotated; the model never sees them.
pub fn rule_annotated(log: &[OutcomeRecord]) -> BTreeSet<EntryKey> {
    log.iter()
        .filter(|r| matches!(r.action, Action::Annotate(_) | Action::DropEntry))
        .map(|r| r.entry_id)
        .collect()
}

pub fn clean_jobs(corpus: &Corpus, skip: &BTreeSet<EntryKey>, strategy: &FewShotStrategy) -> Vec<BatchJob> {
    if !strategy.level.uses_model() {
        return Vec::new();
    }
    corpus
        .entries()
        .iter()
        .filter(|e| !skip.contains(&e.key))
        .filter_map(|e| {
            let request = CleanRequest::new(e.fsw.sign_count(), Some(e.language.clone()), e.terms.clone())?
                .with_origin(e.key);
            Some(BatchJob {
                id: e.key.to_string(),
                messages: build_clean_prompt(&request, strategy),
            })
        })
        .collect()
}

pub fn expand_jobs(corpus: &Corpus) -> Vec<BatchJob> {
    corpus
        .entries()
        .iter()
        .filter(|e| !e.terms.is_empty())
        .map(|e| BatchJob {
            id: e.key.to_string(),
            messages: build_expand_prompt(&ExpandRequest {
                language: e.language.clone(),
                terms: e.terms.clone(),
            }),
        })
        .collect()
}

fn successes<T: Clone>(report: &BatchReport<T>) -> BTreeMap<EntryKey, T> {
    report
        .results
        .iter()
        .filter_map(|(id, r)| match r {
            JobResult::Success(v) => Some((id.parse().expect("job ids are entry keys"), v.clone())),
            JobResult::Failure(_) => None,
        })
        .collect()
}

/// Model cleaning of every entry not in `skip`. Entries whose call failed keep
/// their current terms and appear in the report's failures.
pub fn clean_corpus(
    corpus: Corpus,
    skip: &BTreeSet<EntryKey>,
    strategy: &FewShotStrategy,
    backend: &dyn ChatBackend,
    limits: &BatchLimits,
    checkpoint: Option<&Path>,
) -> Result<(Corpus, BatchReport<Vec<String>>), BatchError> {
    let jobs = clean_jobs(&corpus, skip, strategy);
    let report = run_batch(&jobs, backend, |_, t| parse_clean_response(t), limits, checkpoint)?;
    let cleaned = successes(&report);
    let corpus = corpus.map_entries(
        |mut e| {
            if let Some(terms) = cleaned.get(&e.key) {
                e.terms = terms.clone();
            }
            e
        },
        Provenance::Cleaned,
    );
    Ok((corpus, report))
}

pub fn expand_corpus(
    corpus: Corpus,
    backend: &dyn ChatBackend,
    limits: &BatchLimits,
    checkpoint: Option<&Path>,
) -> Result<(Corpus, BatchReport<ExpansionResult>), BatchError> {
    let jobs = expand_jobs(&corpus);
    let parse = |job: &BatchJob, text: &str| {
        let key: EntryKey = job.id.parse().expect("job ids are entry keys");
        let language = &corpus.get(key).expect("job from corpus").language;
        parse_expand_response(text, language)
    };
    let report = run_batch(&jobs, backend, parse, limits, checkpoint)?;
    let expanded = apply_expansion(corpus, &successes(&report));
    Ok((expanded, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Entry;
    use crate::fsw::parse_sequence;
    use crate::llm::{BackendError, ChatMessage, IdentityBackend, StrategyLevel};
    use crate::rules::RuleEngine;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::time::Duration;

    fn corpus() -> Corpus {
        let e = |p, id, lang: &str, terms: &[&str]| {
            Entry::new(
                EntryKey::new(p, id),
                lang,
                parse_sequence("M500x500 M500x500").unwrap(),
                terms.iter().map(|s| s.to_string()).collect(),
            )
        };
        Corpus::new(
            vec![
                e(52, 1, "sl", &["zdarma B (UPOL)"]),
                e(52, 2, "sl", &["Koreja (mednarodno)", "Korea"]),
                e(11, 3, "en", &["hello"]),
                e(11, 4, "en", &[]),
            ],
            Provenance::Original,
        )
        .unwrap()
    }

    fn limits() -> BatchLimits {
        BatchLimits {
            max_in_flight: 2,
            retries: 0,
            backoff: Duration::ZERO,
            min_interval: None,
        }
    }

    struct Counting(AtomicUsize);

    impl ChatBackend for Counting {
        fn model_name(&self) -> &str {
            "counting"
        }
        fn price_per_1k_tokens(&self) -> f64 {
            0.0
        }
        fn send(&self, m: &[ChatMessage]) -> Result<String, BackendError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            IdentityBackend.send(m)
        }
    }

    #[test]
    fn clean_skips_rule_annotations_and_empty_entries() {
        let (ruled, log) = RuleEngine::default().apply_corpus(corpus());
        let skip = rule_annotated(&log);
        assert_eq!(skip.into_iter().collect::<Vec<_>>(), [EntryKey::new(52, 1)]);
        let strategy = FewShotStrategy::new(StrategyLevel::E2);
        let jobs = clean_jobs(&ruled, &rule_annotated(&log), &strategy);
        assert_eq!(jobs.iter().map(|j| j.id.as_str()).collect::<Vec<_>>(), ["11:3", "52:2"]);
        assert!(jobs[1].messages.last().unwrap().content.starts_with("clean(2, \"sl\""));

        let backend = Counting(AtomicUsize::new(0));
        let (out, report) = clean_corpus(ruled, &rule_annotated(&log), &strategy, &backend, &limits(), None).unwrap();
        assert_eq!(backend.0.load(Ordering::SeqCst), 2);
        assert_eq!(report.results.len(), 2);
        assert_eq!(out.provenance, Provenance::Cleaned);
        assert_eq!(out.get(EntryKey::new(52, 1)).unwrap().terms, ["zdarma"]);
    }

    #[test]
    fn e1_makes_no_calls() {
        let backend = Counting(AtomicUsize::new(0));
        let strategy = FewShotStrategy::new(StrategyLevel::E1);
        let (out, report) = clean_corpus(corpus(), &BTreeSet::new(), &strategy, &backend, &limits(), None).unwrap();
        assert_eq!(backend.0.load(Ordering::SeqCst), 0);
        assert!(report.results.is_empty());
        assert_eq!(out.entries(), corpus().entries());
    }

    #[test]
    fn failed_calls_keep_terms() {
        struct Down;
        impl ChatBackend for Down {
            fn model_name(&self) -> &str {
                "down"
            }
            fn price_per_1k_tokens(&self) -> f64 {
                0.0
            }
            fn send(&self, _: &[ChatMessage]) -> Result<String, BackendError> {
                Err(BackendError::Transport("offline".into()))
            }
        }
        let strategy = FewShotStrategy::new(StrategyLevel::E2);
        let (out, report) = clean_corpus(corpus(), &BTreeSet::new(), &strategy, &Down, &limits(), None).unwrap();
        assert_eq!(out.entries(), corpus().entries());
        assert_eq!(report.failures().count(), 3);
    }

    #[test]
    fn expand_attaches_english() {
        let (out, report) = expand_corpus(corpus(), &IdentityBackend, &limits(), None).unwrap();
        assert_eq!(report.results.len(), 3);
        assert_eq!(out.provenance, Provenance::Expanded);
        // The identity model answers an empty English list.
        let e = out.get(EntryKey::new(52, 2)).unwrap();
        assert_eq!(e.terms, ["Koreja (mednarodno)", "Korea"]);
        assert!(e.english_terms.is_empty());
    }

    #[test]
    fn gold_file_and_pool() {
        let gold = parse_gold("52\t2\tKoreja||Korea\n11\t3\t\n99\t1\tx\n").unwrap();
        assert_eq!(gold.len(), 3);
        let pool = gold_pool(&gold, &corpus());
        assert_eq!(pool[&52][0].output, ["Koreja", "Korea"]);
        assert_eq!(pool[&52][0].num_signs, 2);
        assert!(pool[&11][0].output.is_empty());
        assert!(!pool.contains_key(&99));
        assert!(parse_gold("52\t2\ta\n52\t2\tb\n").is_err());
        assert!(parse_gold("x\t2\n").is_err());
    }
}

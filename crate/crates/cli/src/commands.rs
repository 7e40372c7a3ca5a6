use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, Context as _};
use log::info;

use signbank::corpus::{
    export, pair_count, parse_corpus, parse_entry_keys, split, write_corpus, Corpus, ExportOptions, LanguageTable,
    Provenance,
};
use signbank::eval::{mean_iou, parse_term_sets, TermSet};
use signbank::fsw::{parse_sequence_with, serialize, ParseMode};
use signbank::llm::{
    estimate_cost, estimate_tokens, price_per_1k, BackendError, BatchJob, BatchLimits, BatchReport, CharsPerToken,
    ChatBackend, FewShotStrategy, HttpBackend, HttpBackendConfig, IdentityBackend, StrategyLevel,
};
use signbank::pipeline::{clean_corpus, clean_jobs, expand_corpus, expand_jobs, gold_pool, parse_gold, rule_annotated};
use signbank::rules::{outcome_log_jsonl, parse_outcome_log, Action, FilterConfig, RuleEngine, VerseStore};
use signbank::tokenizer::{build_vocabulary, detokenize, parse_tokens, tokenize, tokens_to_text};

use crate::config::{config_error, read_config_file, PipelineConfig};
use crate::Options;

pub struct Context {
    cfg: PipelineConfig,
    dry_run: bool,
    estimate_only: bool,
    provenance: Provenance,
    mode: ParseMode,
}

fn read_input(path: Option<&Path>) -> anyhow::Result<String> {
    match path {
        None => read_stdin(),
        Some(p) if p.as_os_str() == "-" => read_stdin(),
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
    }
}

fn read_stdin() -> anyhow::Result<String> {
    let mut text = String::new();
    io::stdin().read_to_string(&mut text).context("reading stdin")?;
    Ok(text)
}

fn parse_provenance(s: &str) -> anyhow::Result<Provenance> {
    match s {
        "original" => Ok(Provenance::Original),
        "cleaned" => Ok(Provenance::Cleaned),
        "expanded" => Ok(Provenance::Expanded),
        other => Err(config_error(format!(
            "unknown provenance {other:?} (expected original, cleaned or expanded)"
        ))),
    }
}

impl Context {
    pub fn new(cfg: PipelineConfig, options: &Options) -> anyhow::Result<Self> {
        let provenance = options
            .provenance
            .as_deref()
            .map(parse_provenance)
            .transpose()?
            .unwrap_or_default();
        let mode = if cfg.strict_fsw {
            ParseMode::Strict
        } else {
            ParseMode::Lenient
        };
        Ok(Self {
            cfg,
            dry_run: options.dry_run,
            estimate_only: options.estimate_only,
            provenance,
            mode,
        })
    }

    /// The single input for line and corpus commands; `None` means stdin.
    fn input(&self) -> anyhow::Result<Option<&Path>> {
        match self.cfg.paths.input.as_slice() {
            [] => Ok(None),
            [one] => Ok(Some(one)),
            _ => Err(config_error("this command takes one --input")),
        }
    }

    fn required_input(&self) -> anyhow::Result<&Path> {
        self.input()?.ok_or_else(|| config_error("--input is required"))
    }

    fn out_dir(&self) -> anyhow::Result<&Path> {
        self.cfg
            .paths
            .out
            .as_deref()
            .ok_or_else(|| config_error("--out <dir> is required"))
    }

    fn write_file(&self, path: &Path, contents: &str) -> anyhow::Result<()> {
        if self.dry_run {
            eprintln!("dry run: would write {} bytes to {}", contents.len(), path.display());
            return Ok(());
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
    }

    /// Main output: `--out` when given, stdout otherwise.
    fn emit(&self, contents: &str) -> anyhow::Result<()> {
        match &self.cfg.paths.out {
            Some(path) => self.write_file(path, contents),
            None if self.dry_run => {
                eprintln!("dry run: would print {} bytes", contents.len());
                Ok(())
            }
            None => {
                let mut stdout = io::stdout().lock();
                stdout.write_all(contents.as_bytes())?;
                stdout.flush()?;
                Ok(())
            }
        }
    }

    fn load_corpus_from(&self, path: &Path) -> anyhow::Result<(Corpus, bool)> {
        let text = read_input(Some(path))?;
        let report = parse_corpus(&text, self.provenance, self.mode);
        for r in &report.rejects {
            eprintln!("{}:{}: {}", path.display(), r.line, r.reason);
        }
        if let Some(rejects) = &self.cfg.paths.rejects {
            let mut body = String::new();
            for r in &report.rejects {
                body.push_str(&r.to_tsv_line());
                body.push('\n');
            }
            self.write_file(rejects, &body)?;
        }
        info!(
            "{}: {} entries, {} rejected rows",
            path.display(),
            report.corpus.len(),
            report.rejects.len()
        );
        Ok((report.corpus, report.rejects.is_empty()))
    }

    fn load_corpus(&self) -> anyhow::Result<(Corpus, bool)> {
        self.load_corpus_from(self.required_input()?)
    }

    pub fn parse(&self) -> anyhow::Result<bool> {
        let text = read_input(self.input()?)?;
        let mut out = String::new();
        let mut ok = true;
        for (i, line) in text.lines().enumerate() {
            match parse_sequence_with(line.trim_end_matches('\r'), self.mode) {
                Ok(seq) => {
                    out.push_str(&serialize(&seq));
                    out.push('\n');
                }
                Err(e) => {
                    eprintln!("line {}: {e}", i + 1);
                    ok = false;
                }
            }
        }
        self.emit(&out)?;
        Ok(ok)
    }

    /// Malformed lines produce a diagnostic and no output line.
    pub fn tokenize(&self, ids: bool, pretty: bool) -> anyhow::Result<bool> {
        let text = read_input(self.input()?)?;
        let vocab = build_vocabulary();
        let mut out = String::new();
        let mut ok = true;
        for (i, line) in text.lines().enumerate() {
            let seq = match parse_sequence_with(line.trim_end_matches('\r'), self.mode) {
                Ok(seq) => seq,
                Err(e) => {
                    eprintln!("line {}: {e}", i + 1);
                    ok = false;
                    continue;
                }
            };
            let tokens = tokenize(&seq);
            if ids {
                let ids = vocab.encode_tokens(&tokens).map_err(|e| anyhow!("line {}: {e}", i + 1))?;
                let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
                out.push_str(&ids.join(" "));
            } else {
                out.push_str(&tokens_to_text(&tokens, pretty));
            }
            out.push('\n');
        }
        self.emit(&out)?;
        Ok(ok)
    }

    pub fn detokenize(&self) -> anyhow::Result<bool> {
        let text = read_input(self.input()?)?;
        let mut out = String::new();
        let mut ok = true;
        for (i, line) in text.lines().enumerate() {
            match parse_tokens(line).and_then(|t| detokenize(&t)) {
                Ok(seq) => {
                    out.push_str(&serialize(&seq));
                    out.push('\n');
                }
                Err(e) => {
                    eprintln!("line {}: {e}", i + 1);
                    ok = false;
                }
            }
        }
        self.emit(&out)?;
        Ok(ok)
    }

    pub fn vocab(&self) -> anyhow::Result<bool> {
        let mut out = String::new();
        for (id, token) in build_vocabulary().texts().enumerate() {
            let _ = writeln!(out, "{id}\t{token}");
        }
        self.emit(&out)?;
        Ok(true)
    }

    pub fn validate(&self) -> anyhow::Result<bool> {
        let (corpus, ok) = self.load_corpus()?;
        println!(
            "{} entries, {} terms, {} pairs",
            corpus.len(),
            corpus.total_terms(),
            pair_count(corpus.entries())
        );
        Ok(ok)
    }

    pub fn rules(&self) -> anyhow::Result<bool> {
        let filters = match &self.cfg.paths.rules {
            Some(p) => FilterConfig::from_toml(&read_config_file(p)?).map_err(|e| config_error(e.to_string()))?,
            None => FilterConfig::builtin(),
        };
        let verses = match &self.cfg.paths.verses {
            Some(p) => VerseStore::load(p).map_err(|e| config_error(e.to_string()))?,
            None => VerseStore::default(),
        };
        let (corpus, ok) = self.load_corpus()?;
        let before = corpus.len();
        let (corpus, log) = RuleEngine::new(filters, verses).apply_corpus(corpus);
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for record in &log {
            let kind = match record.action {
                Action::Annotate(_) => "annotated",
                Action::DropEntry => "dropped",
                Action::Keep(_) => "filtered",
                Action::Unchanged => "unchanged",
            };
            *counts.entry(kind).or_default() += 1;
        }
        eprintln!("{before} entries: {counts:?}");
        if let Some(path) = &self.cfg.paths.rules_log {
            self.write_file(path, &outcome_log_jsonl(&log))?;
        }
        self.emit(&write_corpus(&corpus))?;
        Ok(ok)
    }

    fn backend(&self) -> anyhow::Result<Box<dyn ChatBackend>> {
        let m = &self.cfg.model;
        match m.backend.as_str() {
            "identity" => Ok(Box::new(IdentityBackend)),
            _ => {
                let config = HttpBackendConfig {
                    api_base: m.api_base.clone(),
                    model: m.model.clone(),
                    temperature: m.temperature,
                    timeout: Duration::from_secs(m.timeout_s),
                    price_per_1k: None,
                };
                HttpBackend::from_env(config)
                    .map(|b| Box::new(b) as Box<dyn ChatBackend>)
                    .map_err(|e| match e {
                        BackendError::MissingCredential => config_error(e.to_string()),
                        other => anyhow!(other),
                    })
            }
        }
    }

    fn limits(&self) -> BatchLimits {
        let m = &self.cfg.model;
        BatchLimits {
            max_in_flight: m.max_in_flight,
            retries: m.retries,
            backoff: Duration::from_millis(m.backoff_ms),
            min_interval: (m.min_interval_ms > 0).then(|| Duration::from_millis(m.min_interval_ms)),
        }
    }

    fn price(&self) -> Option<f64> {
        match self.cfg.model.backend.as_str() {
            "identity" => Some(0.0),
            _ => price_per_1k(&self.cfg.model.model),
        }
    }

    fn print_estimate(&self, jobs: &[BatchJob]) {
        let counts = estimate_tokens(jobs.iter().map(|j| j.messages.as_slice()), &CharsPerToken::default());
        let total: usize = counts.iter().sum();
        println!("requests: {}", jobs.len());
        println!("estimated tokens: {total}");
        match self.price() {
            Some(price) => {
                println!("model: {} at ${price} per 1K tokens", self.cfg.model.model);
                println!("estimated cost: ${:.4}", estimate_cost(counts, price));
            }
            None => println!("model: {} has no known price", self.cfg.model.model),
        }
    }

    /// Estimate, dry run, or a real batch. `None` when the command stops early.
    fn plan(&self, jobs: &[BatchJob]) -> anyhow::Result<Option<Box<dyn ChatBackend>>> {
        if self.estimate_only {
            self.print_estimate(jobs);
            return Ok(None);
        }
        if self.dry_run {
            eprintln!("dry run: {} model requests would be sent", jobs.len());
            return Ok(None);
        }
        self.backend().map(Some)
    }

    fn finish<T: serde::Serialize>(&self, report: &BatchReport<T>) -> anyhow::Result<bool> {
        let failures = report.failures().count();
        eprintln!(
            "requests sent: {}, resumed: {}, failures: {failures}",
            report.requests_sent, report.resumed
        );
        if let Some(path) = &self.cfg.paths.failures {
            self.write_file(path, &report.failure_log_jsonl())?;
        } else {
            for (id, reason) in report.failures() {
                eprintln!("{id}: {reason}");
            }
        }
        Ok(failures == 0)
    }

    fn checkpoint(&self) -> Option<&Path> {
        self.cfg.paths.checkpoint.as_deref()
    }

    pub fn clean(&self) -> anyhow::Result<bool> {
        let level = self.cfg.strategy()?;
        let (corpus, ok) = self.load_corpus()?;
        let skip: BTreeSet<_> = match &self.cfg.paths.rules_log {
            Some(p) => rule_annotated(&parse_outcome_log(&read_config_file(p)?).map_err(|e| anyhow!(e))?),
            None => BTreeSet::new(),
        };
        let mut strategy = FewShotStrategy::new(level);
        if matches!(level, StrategyLevel::E3 | StrategyLevel::E4) {
            let Some(gold_path) = &self.cfg.paths.gold else {
                return Err(config_error(format!("strategy {level} needs --gold for same-puddle examples")));
            };
            let gold = parse_gold(&read_input(Some(gold_path))?).map_err(|e| anyhow!("{}: {e}", gold_path.display()))?;
            strategy = strategy.with_pool(gold_pool(&gold, &corpus));
        }
        let jobs = clean_jobs(&corpus, &skip, &strategy);
        info!("{} entries, {} skipped by rules, {} requests", corpus.len(), skip.len(), jobs.len());
        let Some(backend) = self.plan(&jobs)? else { return Ok(ok) };
        let (cleaned, report) = clean_corpus(corpus, &skip, &strategy, backend.as_ref(), &self.limits(), self.checkpoint())?;
        self.emit(&write_corpus(&cleaned))?;
        Ok(self.finish(&report)? && ok)
    }

    pub fn expand(&self) -> anyhow::Result<bool> {
        let (corpus, ok) = self.load_corpus()?;
        let jobs = expand_jobs(&corpus);
        let Some(backend) = self.plan(&jobs)? else { return Ok(ok) };
        let (expanded, report) = expand_corpus(corpus, backend.as_ref(), &self.limits(), self.checkpoint())?;
        self.emit(&write_corpus(&expanded))?;
        Ok(self.finish(&report)? && ok)
    }

    /// Predictions may be a term-set file or a corpus TSV.
    fn predictions(&self, path: &Path) -> anyhow::Result<BTreeMap<signbank::corpus::EntryKey, TermSet>> {
        let text = read_input(Some(path))?;
        if let Ok(sets) = parse_term_sets(&text) {
            return Ok(sets);
        }
        let report = parse_corpus(&text, Provenance::Original, self.mode);
        if let Some(r) = report.rejects.first() {
            return Err(anyhow!("{}:{}: {}", path.display(), r.line, r.reason));
        }
        Ok(report
            .corpus
            .entries()
            .iter()
            .map(|e| (e.key, TermSet::new(&e.terms)))
            .collect())
    }

    pub fn eval_iou(&self, json: bool) -> anyhow::Result<bool> {
        let pred_path = self.required_input()?;
        let gold_path = self.cfg.paths.gold.as_deref().ok_or_else(|| config_error("--gold is required"))?;
        let predictions = self.predictions(pred_path)?;
        let gold = parse_term_sets(&read_input(Some(gold_path))?).map_err(|e| anyhow!("{}: {e}", gold_path.display()))?;
        let report = mean_iou(&predictions, &gold)?;
        let body = if json {
            serde_json::to_string_pretty(&report)? + "\n"
        } else {
            report.to_table()
        };
        self.emit(&body)?;
        Ok(true)
    }

    pub fn split(&self) -> anyhow::Result<bool> {
        let out = self.out_dir()?.to_path_buf();
        let test_ids: BTreeSet<_> = match &self.cfg.paths.test_ids {
            Some(p) => parse_entry_keys(&read_config_file(p)?)
                .map_err(|e| anyhow!("{}: {e}", p.display()))?
                .into_iter()
                .collect(),
            None => BTreeSet::new(),
        };
        let (corpus, ok) = self.load_corpus()?;
        let parts = split(corpus, self.cfg.dev_size, &test_ids)?;
        let mut summary = serde_json::Map::new();
        for (name, part) in [("train", &parts.train), ("dev", &parts.dev), ("test", &parts.test)] {
            self.write_file(&out.join(format!("{name}.tsv")), &write_corpus(part))?;
            summary.insert(name.into(), part.len().into());
        }
        summary.insert("config_hash".into(), self.cfg.fingerprint()?.into());
        println!("{}", serde_json::Value::Object(summary));
        Ok(ok)
    }

    pub fn export(&self, name: Option<&str>) -> anyhow::Result<bool> {
        let out = self.out_dir()?;
        let inputs = &self.cfg.paths.input;
        if inputs.is_empty() {
            return Err(config_error("--input is required"));
        }
        if name.is_some() && inputs.len() > 1 {
            return Err(config_error("--name needs exactly one --input"));
        }
        let tags: LanguageTable = self.cfg.languages()?;
        let options = |name: String| -> anyhow::Result<ExportOptions> {
            Ok(ExportOptions {
                name,
                direction: self.cfg.direction()?,
                config_hash: self.cfg.fingerprint()?,
            })
        };
        let mut ok = true;
        for input in inputs {
            let split_name = match name {
                Some(n) => n.to_string(),
                None => stem(input)?,
            };
            let (corpus, loaded) = self.load_corpus_from(input)?;
            ok &= loaded;
            if self.dry_run {
                eprintln!(
                    "dry run: would export {} pairs as {split_name} into {}",
                    pair_count(corpus.entries()),
                    out.display()
                );
                continue;
            }
            let manifest = export(&corpus, &options(split_name.clone())?, &tags, out)
                .with_context(|| format!("exporting {split_name} to {}", out.display()))?;
            let split = &manifest.splits[&split_name];
            println!("{split_name}: {} entries, {} pairs", split.entries, split.pairs);
        }
        Ok(ok)
    }
}

fn stem(path: &Path) -> anyhow::Result<String> {
    PathBuf::from(path)
        .file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| config_error(format!("cannot derive a split name from {}", path.display())))
}

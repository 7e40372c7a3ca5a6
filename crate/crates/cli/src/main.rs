//! `signbank`: command-line front end for the corpus preparation pipeline.
//!
//! Exit codes: 0 when every line and entry went through, 1 when some input
//! was rejected or a model call failed, 2 for bad flags, config or paths.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "signbank", version, about = "SignWriting corpus preparation for translation models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse FSW lines and print them in canonical form.
    Parse,
    /// Tokenize FSW lines, one token line per input line.
    Tokenize {
        /// Print vocabulary ids instead of token text.
        #[arg(long)]
        ids: bool,
        /// One line per box or symbol.
        #[arg(long, conflicts_with = "ids")]
        pretty: bool,
    },
    /// Turn token lines back into FSW.
    Detokenize,
    /// Print the token vocabulary as `id<TAB>token`.
    Vocab,
    /// Check a corpus TSV and report rejected rows.
    Validate,
    /// Apply the annotation and filter rules to a corpus.
    Rules,
    /// Clean term lists with a chat model.
    Clean,
    /// Add spoken-language variants and English terms with a chat model.
    Expand,
    /// Score predicted term sets against gold by mean IoU.
    EvalIou {
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Split a corpus into train, dev and test TSV files.
    Split,
    /// Write line-aligned source/target files and the manifest.
    Export {
        /// Split name; defaults to each input's file stem.
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// TOML pipeline configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input file (`-` for stdin). Repeatable for `export`.
    #[arg(long, global = true)]
    input: Vec<PathBuf>,
    /// Gold term sets (`puddle<TAB>entry<TAB>t1||t2`).
    #[arg(long, global = true)]
    gold: Option<PathBuf>,
    /// Output file, or directory for `split` and `export`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Filter rules TOML; the built-in rules are used when absent.
    #[arg(long, global = true)]
    rules: Option<PathBuf>,
    /// Verse store TSV for the Bible puddles.
    #[arg(long, global = true)]
    verses: Option<PathBuf>,
    /// Resumable JSONL checkpoint for model calls.
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    /// Entry ids held out as test (`puddle<TAB>entry` per line).
    #[arg(long, global = true)]
    test_ids: Option<PathBuf>,
    /// Puddle to signed-language tag table.
    #[arg(long, global = true)]
    languages: Option<PathBuf>,
    /// Where rejected input rows go.
    #[arg(long, global = true)]
    rejects: Option<PathBuf>,
    /// Rule outcome log: written by `rules`, read by `clean`.
    #[arg(long, global = true)]
    rules_log: Option<PathBuf>,
    /// Where failed model calls are logged (JSONL).
    #[arg(long, global = true)]
    failures: Option<PathBuf>,
    #[arg(long, global = true)]
    model: Option<String>,
    /// `http` or `identity`.
    #[arg(long, global = true)]
    backend: Option<String>,
    #[arg(long, global = true)]
    api_base: Option<String>,
    /// Prompting strategy, e1 to e4.
    #[arg(long, global = true)]
    strategy: Option<String>,
    #[arg(long, global = true)]
    max_in_flight: Option<usize>,
    #[arg(long, global = true)]
    retries: Option<u32>,
    #[arg(long, global = true)]
    backoff_ms: Option<u64>,
    #[arg(long, global = true)]
    min_interval_ms: Option<u64>,
    /// `signed_to_spoken` or `spoken_to_signed`.
    #[arg(long, global = true)]
    direction: Option<String>,
    #[arg(long, global = true)]
    dev_size: Option<usize>,
    /// `original`, `cleaned` or `expanded`; recorded in export manifests.
    #[arg(long, global = true)]
    provenance: Option<String>,
    /// Reject the unassigned symbol bases too.
    #[arg(long, global = true)]
    strict_fsw: bool,
    /// Validate everything and report what would happen; no writes, no calls.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Print the request count and cost estimate, then stop.
    #[arg(long, global = true)]
    estimate_only: bool,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Options {
    fn apply(&self, cfg: &mut PipelineConfig) {
        let p = &mut cfg.paths;
        if !self.input.is_empty() {
            p.input = self.input.clone();
        }
        let overrides = [
            (&mut p.gold, &self.gold),
            (&mut p.out, &self.out),
            (&mut p.rules, &self.rules),
            (&mut p.verses, &self.verses),
            (&mut p.checkpoint, &self.checkpoint),
            (&mut p.test_ids, &self.test_ids),
            (&mut p.languages, &self.languages),
            (&mut p.rejects, &self.rejects),
            (&mut p.rules_log, &self.rules_log),
            (&mut p.failures, &self.failures),
        ];
        for (slot, flag) in overrides {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        let m = &mut cfg.model;
        if let Some(v) = &self.model {
            m.model = v.clone();
        }
        if let Some(v) = &self.backend {
            m.backend = v.clone();
        }
        if let Some(v) = &self.api_base {
            m.api_base = v.clone();
        }
        if let Some(v) = self.max_in_flight {
            m.max_in_flight = v;
        }
        if let Some(v) = self.retries {
            m.retries = v;
        }
        if let Some(v) = self.backoff_ms {
            m.backoff_ms = v;
        }
        if let Some(v) = self.min_interval_ms {
            m.min_interval_ms = v;
        }
        if let Some(v) = &self.strategy {
            cfg.strategy = v.clone();
        }
        if let Some(v) = &self.direction {
            cfg.direction = v.clone();
        }
        if let Some(v) = self.dev_size {
            cfg.dev_size = v;
        }
        cfg.strict_fsw |= self.strict_fsw;
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let mut cfg = match &cli.options.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cli.options.apply(&mut cfg);
    cfg.validate()?;
    let ctx = commands::Context::new(cfg, &cli.options)?;
    match cli.command {
        Command::Parse => ctx.parse(),
        Command::Tokenize { ids, pretty } => ctx.tokenize(ids, pretty),
        Command::Detokenize => ctx.detokenize(),
        Command::Vocab => ctx.vocab(),
        Command::Validate => ctx.validate(),
        Command::Rules => ctx.rules(),
        Command::Clean => ctx.clean(),
        Command::Expand => ctx.expand(),
        Command::EvalIou { json } => ctx.eval_iou(json),
        Command::Split => ctx.split(),
        Command::Export { name } => ctx.export(name.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.options.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

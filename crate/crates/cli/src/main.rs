//! `analogy`: extraction, training-data emission, inference and reporting
//! over an LLM oracle.

mod commands;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use analogy_core::config::{BackendKind, SimilarityKind};
use analogy_core::datakit::{Dataset, IngestFormat, Split};
use analogy_core::simplify::Reading;
use analogy_core::{Error, OracleError, RunConfig};
use clap::{Args, Parser, Subcommand};
use setup::serde_enum;

#[derive(Debug, Parser)]
#[command(
    name = "analogy",
    version,
    about = "Program-form supervision extraction and program-voting inference"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where to write the run manifest.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// More log output (repeatable). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run conceptualization extraction over a question file.
    ExtractConcept {
        #[command(flatten)]
        io: InputArgs,
        #[command(flatten)]
        oracle: OracleArgs,
        /// Similar questions generated per abstraction.
        #[arg(long)]
        n: Option<usize>,
        /// Chain-of-thought samples per similar question.
        #[arg(long)]
        k: Option<usize>,
        /// Agreement needed among the K samples.
        #[arg(long)]
        x: Option<usize>,
        #[arg(long)]
        sim_cutoff: Option<f64>,
    },
    /// Run simplification extraction over math questions.
    ExtractSimplify {
        #[command(flatten)]
        io: InputArgs,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        quota: Option<usize>,
        #[arg(long)]
        sample_count: Option<usize>,
    },
    /// Combine seed and extracted instances into one training file.
    EmitTrain {
        /// Extracted instance files.
        #[arg(long, num_args = 1.., required = true)]
        instances: Vec<PathBuf>,
        /// Seed instances; the built-in seed set when omitted.
        #[arg(long, conflicts_with = "no_seed")]
        seed: Option<PathBuf>,
        #[arg(long)]
        no_seed: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Answer questions by program voting.
    Infer {
        #[command(flatten)]
        io: InputArgs,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long)]
        k: Option<usize>,
        /// Retry unknown answers with oracle-written context paragraphs.
        #[arg(long)]
        rag: bool,
        /// Drop programs whose queries repeat the question at this similarity.
        #[arg(long)]
        no_repeat: Option<f64>,
        /// Answer through the abstract form of each question.
        #[arg(long)]
        conceptual: bool,
    },
    /// Score predictions against gold answers.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_parser = serde_enum::<IngestFormat>, default_value = "jsonl")]
        format: IngestFormat,
        /// Metrics JSON output.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Per-iteration simplification yield.
    Stats {
        #[arg(long, num_args = 1.., required = true)]
        journals: Vec<PathBuf>,
        /// Records carrying gold answers for the accuracy column.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long, value_parser = serde_enum::<Reading>, default_value = "quota")]
        reading: Reading,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Machine-readable report.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    journal: Option<PathBuf>,
    #[arg(long, value_parser = serde_enum::<IngestFormat>, default_value = "jsonl")]
    format: IngestFormat,
    #[arg(long, value_parser = serde_enum::<Dataset>)]
    dataset: Option<Dataset>,
    #[arg(long, value_parser = serde_enum::<Split>)]
    split: Option<Split>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long, value_parser = serde_enum::<BackendKind>)]
    backend: Option<BackendKind>,
    /// Scripted backend rule file.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Completion cache (JSONL); required for replay.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    retries: Option<u32>,
    #[arg(long, value_parser = serde_enum::<SimilarityKind>)]
    similarity: Option<SimilarityKind>,
}

impl InputArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let p = &mut cfg.paths;
        p.input = self.input.clone().or(p.input.take());
        p.output = self.output.clone().or(p.output.take());
        p.journal = self.journal.clone().or(p.journal.take());
    }
}

impl OracleArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let o = &mut cfg.oracle;
        if let Some(b) = self.backend {
            o.backend = b;
        }
        if let Some(s) = self.similarity {
            o.similarity = s;
        }
        o.script = self.script.clone().or(o.script.take());
        o.cache = self.cache.clone().or(o.cache.take());
        o.endpoint = self.endpoint.clone().or(o.endpoint.take());
        o.model = self.model.clone().or(o.model.take());
        o.concurrency = self.concurrency.unwrap_or(o.concurrency);
        o.retries = self.retries.unwrap_or(o.retries);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

/// 2 for backend outages, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let unavailable = err.chain().any(|e| {
        e.downcast_ref::<Error>()
            .is_some_and(Error::is_backend_unavailable)
            || e.downcast_ref::<OracleError>()
                .is_some_and(OracleError::is_unavailable)
    });
    if unavailable {
        2
    } else {
        1
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = setup::load_config(cli.config.as_deref())?;
    let manifest = cli.manifest.as_deref();
    match cli.command {
        Command::ExtractConcept {
            io,
            oracle,
            n,
            k,
            x,
            sim_cutoff,
        } => {
            io.apply(&mut cfg);
            oracle.apply(&mut cfg);
            set(&mut cfg.selection.n, n);
            set(&mut cfg.selection.k, k);
            set(&mut cfg.selection.x, x);
            set(&mut cfg.selection.sim_cutoff, sim_cutoff);
            cfg.validate()?;
            commands::extract_concept(&cfg, &io, manifest)
        }
        Command::ExtractSimplify {
            io,
            oracle,
            max_iters,
            quota,
            sample_count,
        } => {
            io.apply(&mut cfg);
            oracle.apply(&mut cfg);
            set(&mut cfg.simplification.max_iters, max_iters);
            set(&mut cfg.simplification.quota, quota);
            set(&mut cfg.simplification.sample_count, sample_count);
            cfg.validate()?;
            commands::extract_simplify(&cfg, &io, manifest)
        }
        Command::EmitTrain {
            instances,
            seed,
            no_seed,
            output,
        } => {
            cfg.paths.output = output.or(cfg.paths.output.take());
            cfg.selection.validate()?;
            commands::emit_train(&cfg, &instances, seed.as_deref(), no_seed, manifest)
        }
        Command::Infer {
            io,
            oracle,
            k,
            rag,
            no_repeat,
            conceptual,
        } => {
            io.apply(&mut cfg);
            oracle.apply(&mut cfg);
            set(&mut cfg.inference.k, k);
            cfg.inference.rag |= rag;
            cfg.inference.no_repeat = no_repeat.or(cfg.inference.no_repeat);
            cfg.validate()?;
            commands::infer(&cfg, &io, conceptual, manifest)
        }
        Command::Eval {
            predictions,
            records,
            format,
            output,
        } => commands::eval(
            &cfg,
            &predictions,
            &records,
            format,
            output.as_deref(),
            manifest,
        ),
        Command::Stats {
            journals,
            gold,
            reading,
            max_iters,
            json,
        } => {
            set(&mut cfg.simplification.max_iters, max_iters);
            commands::stats(
                &cfg,
                &journals,
                gold.as_deref(),
                reading,
                json.as_deref(),
                manifest,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

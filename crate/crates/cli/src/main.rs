//! `hategraph`: generate or ingest data, train embeddings and classifiers,
//! run benchmark sweeps, transfer evaluations and post-facto analytics.
//!
//! Settings come from an optional JSON config file; flags override it.
//! Failures print a single JSON object on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hategraph::pipeline::{run, Command, PipelineConfig, MODEL_NAMES};
use hategraph::Error;

#[derive(Parser, Debug)]
#[command(name = "hategraph", version, about = "Hateful-user detection on social graphs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a synthetic dataset into the output directory.
    Synth(Common),
    /// Train the configured feature source and save it as a container.
    Embed(Common),
    /// Train the first model on fold 0 and save checkpoint, loss curve and predictions.
    Train(Common),
    /// Sweep models over label fractions and folds.
    Benchmark(Common),
    /// Train on the source dataset and evaluate zero-shot on the transfer target.
    Transfer(Common),
    /// Label monthly snapshots and report targeted communities and trending hashtags.
    Posthoc(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON pipeline config.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root seed for every stochastic component.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Models, comma separated.
    #[arg(long, value_name = "NAMES", value_delimiter = ',', value_parser = clap::builder::PossibleValuesParser::new(MODEL_NAMES))]
    model: Option<Vec<String>>,
    /// Label fractions in percent, comma separated.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
}

impl Cmd {
    fn split(self) -> (Command, Common) {
        match self {
            Cmd::Synth(c) => (Command::Synth, c),
            Cmd::Embed(c) => (Command::Embed, c),
            Cmd::Train(c) => (Command::Train, c),
            Cmd::Benchmark(c) => (Command::Benchmark, c),
            Cmd::Transfer(c) => (Command::Transfer, c),
            Cmd::Posthoc(c) => (Command::Posthoc, c),
        }
    }
}

fn build_config(args: Common) -> Result<PipelineConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if let Some(models) = args.model {
        cfg.models = models;
    }
    if let Some(fractions) = args.fractions {
        cfg.folds.fractions = fractions;
    }
    Ok(cfg)
}

fn init_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("HATEGRAPH_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("HATEGRAPH_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("cannot size the thread pool: {e}")))
}

fn error_json(e: &Error) -> serde_json::Value {
    let mut obj = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
    let path = match e {
        Error::MissingFile(p) => Some(p.display().to_string()),
        Error::Parse { path, .. } => Some(path.clone()),
        _ => None,
    };
    if let Some(p) = path {
        obj["path"] = p.into();
    }
    obj
}

/// Exit 2 for anything wrong with the inputs, 1 for environmental failures.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (command, args) = Cli::parse().command.split();
    let result = init_threads()
        .and_then(|()| build_config(args))
        .and_then(|cfg| run(command, &cfg));
    match result {
        Ok(manifest) => {
            log::info!("{command}: wrote {} files to {}", manifest.outputs.len() + 1, manifest_dir(&manifest));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

fn manifest_dir(m: &hategraph::pipeline::Manifest) -> String {
    m.config
        .get("out")
        .and_then(|v| v.as_str())
        .unwrap_or("out")
        .to_owned()
}

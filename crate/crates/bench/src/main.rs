use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use triage_bench::config::{ExperimentConfig, LoadedConfig};
use triage_bench::labels::read_gold;
use triage_bench::manifest::{RunManifest, StageStatus};
use triage_bench::pipeline::{run_until, Stage};
use triage_bench::predio::read_predictions;
use triage_bench::synthetic::write_fixture;
use triage_core::digest::sha256_hex;
use triage_core::evaluation::compare_sets;

#[derive(Parser)]
#[command(name = "triage-bench", version, about = "Triage classification benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage.
    Run(RunArgs),
    /// Quality-filter the corpus.
    Filter(RunArgs),
    /// Filter, then build the stratified working pool.
    Sample(RunArgs),
    /// Run through the silver/gold/few-shot split.
    Split(RunArgs),
    /// Run through training the supervised baseline.
    Train(RunArgs),
    /// Run through the LLM classification jobs.
    Classify(RunArgs),
    /// Run through ingesting external prediction files.
    Ingest(RunArgs),
    /// Run through per-configuration evaluation.
    Evaluate(RunArgs),
    /// Run through the consensus sweep.
    Consensus(RunArgs),
    /// Run every stage and print where the reports went.
    Report(RunArgs),
    /// McNemar test and metric deltas between two prediction files.
    Compare {
        /// Gold label file (csv or jsonl).
        #[arg(long)]
        gold: PathBuf,
        a: PathBuf,
        b: PathBuf,
    },
    /// Check a config without running anything.
    Validate {
        #[arg(long, short)]
        config: PathBuf,
    },
    /// Write a synthetic corpus, labels and a stub-backed config into DIR.
    Demo { dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, short)]
    config: PathBuf,
    /// Override the run directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override the sampling and split seed.
    #[arg(long)]
    sampling_seed: Option<u64>,
    /// Override the bootstrap seed.
    #[arg(long)]
    bootstrap_seed: Option<u64>,
    /// Override the number of bootstrap replicates.
    #[arg(long)]
    replicates: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> anyhow::Result<LoadedConfig> {
        let mut loaded = ExperimentConfig::load(&self.config)?;
        let overrides = json!({
            "output_dir": self.output_dir,
            "sampling_seed": self.sampling_seed,
            "bootstrap_seed": self.bootstrap_seed,
            "replicates": self.replicates,
        });
        let cfg = &mut loaded.config;
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        if let Some(s) = self.sampling_seed {
            cfg.sampling.seed = s;
        }
        if let Some(s) = self.bootstrap_seed {
            cfg.evaluation.seed = s;
        }
        if let Some(r) = self.replicates {
            cfg.evaluation.replicates = r;
        }
        if overrides.as_object().is_some_and(|o| o.values().any(|v| !v.is_null())) {
            loaded.digest = sha256_hex(format!("{}\n{overrides}", loaded.digest).as_bytes());
        }
        Ok(loaded)
    }
}

fn print_summary(m: &RunManifest, dir: &Path) {
    for s in &m.stages {
        let status = match s.status {
            StageStatus::Ran => "ran",
            StageStatus::Reused => "reused",
        };
        println!("{:<24} {status}", s.name);
    }
    println!("run directory: {}", dir.display());
}

fn run(args: &RunArgs, last: Stage) -> anyhow::Result<()> {
    let loaded = args.load()?;
    let manifest = run_until(&loaded, last)?;
    print_summary(&manifest, &loaded.config.output_dir);
    Ok(())
}

fn real_main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run(a) | Command::Report(a) => run(&a, Stage::Report),
        Command::Filter(a) => run(&a, Stage::Filter),
        Command::Sample(a) => run(&a, Stage::Sample),
        Command::Split(a) => run(&a, Stage::Split),
        Command::Train(a) => run(&a, Stage::Train),
        Command::Classify(a) => run(&a, Stage::Classify),
        Command::Ingest(a) => run(&a, Stage::Ingest),
        Command::Evaluate(a) => run(&a, Stage::Evaluate),
        Command::Consensus(a) => run(&a, Stage::Consensus),
        Command::Compare { gold, a, b } => {
            let gold = read_gold(&gold)?;
            let a = read_predictions(&a).with_context(|| a.display().to_string())?;
            let b = read_predictions(&b).with_context(|| b.display().to_string())?;
            let cmp = compare_sets(&gold, &a, &b)?;
            println!("{}", serde_json::to_string_pretty(&cmp)?);
            Ok(())
        }
        Command::Validate { config } => {
            let loaded = ExperimentConfig::load(&config)?;
            loaded.config.validate()?;
            println!("ok: {} configuration(s)", loaded.config.configuration_names().len());
            Ok(())
        }
        Command::Demo { dir } => {
            let f = write_fixture(&dir)?;
            println!("wrote {}", f.config.display());
            println!("next: triage-bench run --config {}", f.config.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

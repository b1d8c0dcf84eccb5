//! Command-line front end: flat config parsing and one subcommand per protocol.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] xchurn::Error),
}

impl CliError {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "xchurn", version, about = "Measure and reduce cross-sample prediction churn")]
pub struct Cli {
    /// Base seed for synthetic data, bootstrap CIs and triage subsets.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set epochs=5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset.
    Synth,
    /// Pairwise churn of a stored prediction file.
    Churn,
    /// Method comparison with paired Δ-metrics and CIs.
    Compare,
    /// Twin-bootstrap λ sweep with tolerance selection and Pareto points.
    SweepLambda,
    /// GP-EI search for λ on each replicate's training pool.
    BoLambda,
    /// Regression optimization trajectories and their stability.
    BoLoop,
    /// Flip-recall triage curves and subset convergence.
    Triage,
    /// ERM churn versus training-pool size.
    Nscale,
    /// Twin-bootstrap across sample-overlap modes.
    Overlap,
    /// Compute and memory accounting table.
    Footprint,
    /// Regenerate tables from stored report CSVs.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Churn => "churn",
            Command::Compare => "compare",
            Command::SweepLambda => "sweep-lambda",
            Command::BoLambda => "bo-lambda",
            Command::BoLoop => "bo-loop",
            Command::Triage => "triage",
            Command::Nscale => "nscale",
            Command::Overlap => "overlap",
            Command::Footprint => "footprint",
            Command::Report => "report",
        }
    }
}

/// Resolve the config from file, `--seed` and `--set`, then run.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut overrides = cli
        .set
        .iter()
        .map(|s| config::parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(s) = cli.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let go = || commands::run_command(cli.command.name(), &cfg, &cli.out);
    match cli.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| CliError::config("jobs", e.to_string()))?
            .install(go),
        None => go(),
    }
}

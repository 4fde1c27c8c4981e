//! Command-line harness: simulate single designs, sweep variable pairs,
//! calibrate the feasible region, run optimizers and compare their traces.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-physical simulation: {0}")]
    NonPhysical(String),
    #[error("optimization aborted: {0}")]
    Aborted(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonPhysical(_) => 3,
            CliError::Aborted(_) => 4,
            CliError::Calibration(_) | CliError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hptowec", version, about = "Wave-energy converter HPTO simulator and optimizer")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides `out_dir` from the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one design and write its time series and metrics.
    Simulate {
        /// Design as `ap,vh0,vl0,pl0`; defaults to `[design]` in the configuration.
        #[arg(long)]
        design: Option<String>,
        /// Simulate even when the design lies outside the search box.
        #[arg(long)]
        allow_outside_box: bool,
    },
    /// Mean electrical power and R_PF over a grid of two variables.
    Sweep {
        /// Two variable names, e.g. `ap,vh0`.
        #[arg(long, conflicts_with = "all_pairs")]
        pair: Option<String>,
        /// Points per axis.
        #[arg(long)]
        grid: Option<usize>,
        /// Sweep all six pairs.
        #[arg(long)]
        all_pairs: bool,
    },
    /// Build the feasible region from a piston-area by HPA-volume grid.
    Calibrate,
    /// Run one optimizer and write its trace and best design.
    Optimize {
        /// nelder-mead, local, mvo, ga, gsf or a preset gsf1..gsf6.
        #[arg(long)]
        algorithm: Option<String>,
        /// Number of objective evaluations.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Tabulate and align several optimization traces.
    Compare {
        /// Trace files written by `optimize`.
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Number of evaluations in the aligned convergence matrix.
        #[arg(long)]
        horizon: Option<usize>,
    },
}

/// Loads the configuration and applies command-line overrides.
pub fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Simulate { design, allow_outside_box } => {
            commands::simulate(&cfg, design.as_deref(), allow_outside_box)
        }
        Command::Sweep { pair, grid, all_pairs } => commands::sweep(&cfg, pair.as_deref(), grid, all_pairs),
        Command::Calibrate => commands::calibrate(&cfg).map(|_| ()),
        Command::Optimize { algorithm, budget } => commands::optimize(&cfg, algorithm.as_deref(), budget).map(|_| ()),
        Command::Compare { traces, horizon } => commands::compare(&cfg, &traces, horizon),
    }
}

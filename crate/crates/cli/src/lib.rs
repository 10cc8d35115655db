// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: model conversion, approximate GEMM, cycle
//! simulation, dataflow footprints and design-space search.
//!
//! Exit codes: 0 success, 1 internal failure, 2 invalid input, 3 no
//! feasible design.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "lutdla", version, about = "LUT-based approximate GEMM toolkit")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides the configured one).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Progress on stderr; `simulate` also writes an event trace.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a dense MLP to LUT layers: substitute, centroid stage, joint stage.
    Convert {
        /// Dense checkpoint; a model is pretrained on the task otherwise.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Fit a codebook on A, multiply through the lookup table and report the error.
    Amm {
        #[arg(long)]
        a: Option<PathBuf>,
        #[arg(long)]
        b: Option<PathBuf>,
    },
    /// Cycle-level simulation of one GEMM.
    Simulate,
    /// On-chip memory footprint of every loop order.
    Dataflow,
    /// Co-design space search.
    Dse,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: RunConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub verbose: bool,
}

impl Context {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let cfg = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let seed = cli.seed.or(cfg.seed).unwrap_or(config::DEFAULT_SEED);
        let out = match (&cli.out, &cfg.out) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => cfg.resolve(o),
            (None, None) => PathBuf::from(config::DEFAULT_OUT),
        };
        Ok(Self { cfg, seed, out, verbose: cli.verbose })
    }

    pub fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Runs one invocation and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let ctx = Context::from_cli(cli)?;
    match &cli.command {
        Command::Convert { model } => commands::convert::run(&ctx, model.as_deref()),
        Command::Amm { a, b } => commands::amm::run(&ctx, a.as_deref(), b.as_deref()),
        Command::Simulate => commands::simulate::run(&ctx),
        Command::Dataflow => commands::dataflow::run(&ctx),
        Command::Dse => commands::dse::run(&ctx),
    }
}

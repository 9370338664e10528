//! Command-line driver for the pairing solvers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

mod commands;
mod config;
mod output;

use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    fn solver<E: std::fmt::Display>(e: E) -> Self {
        CliError::Solver(e.to_string())
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Config(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "boson-pairing", version, about = "Exact, continuum and mean-field solvers for bosonic pairing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Cross-check Richardson energies against exact diagonalization.
    #[arg(long, global = true)]
    verify: bool,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact diagonalization: full spectrum and ground-state occupations.
    Oracle(Overrides),
    /// Richardson roots and energies along a coupling sweep.
    Richardson(Overrides),
    /// Thermodynamic-limit phase sweep over (g, rho).
    Continuum(Overrides),
    /// Naive and modified mean field along a coupling sweep.
    Meanfield(Overrides),
    /// Solver cross-check suite.
    Verify(Overrides),
}

#[derive(Debug, clap::Args)]
struct Overrides {
    /// key=value settings applied after the configuration file.
    settings: Vec<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, overrides) = match &cli.command {
        Command::Oracle(o) => ("oracle", o),
        Command::Richardson(o) => ("richardson", o),
        Command::Continuum(o) => ("continuum", o),
        Command::Meanfield(o) => ("meanfield", o),
        Command::Verify(o) => ("verify", o),
    };
    let mut config = RunConfig::load(cli.config.as_deref(), &overrides.settings)?;
    if let Some(out) = &cli.out {
        config.set("out", out.display().to_string())?;
    }
    if let Some(seed) = cli.seed {
        config.set("seed", seed.to_string())?;
    }
    if cli.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match name {
        "oracle" => commands::oracle(&config),
        "richardson" => commands::richardson(&config, cli.verify),
        "continuum" => commands::continuum(&config),
        "meanfield" => commands::meanfield(&config),
        _ => commands::verify(&config),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

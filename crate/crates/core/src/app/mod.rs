//! Command-line front end: `cdsbounds <command> --config <path> --out <dir>
//! [--seed N] [--plots]`.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 configuration error,
//! 3 infeasible or unbounded linear program, 4 failed self-check.

pub mod commands;
pub mod config;
pub mod plot;
pub mod table;

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::lp::LpStatus;

pub use config::{ConfigError, Inputs, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Bounds versus the illiquid spread.
    Bounds,
    /// LP hedges, duality certificates and the uniqueness probe.
    Hedge,
    /// Payoff densities, atoms and the Monte Carlo cross-check.
    Density,
    /// Good-deal bid/ask curves and point quotes.
    Gooddeal,
    /// Bid/ask across default probabilities and recovery laws.
    Sweep,
    /// Spread-gap scaling invariants.
    Scalecheck,
}

#[derive(Debug, Parser)]
#[command(name = "cdsbounds", version, about = "Hedging bounds and good-deal prices for illiquid CDSs")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also render SVG charts from the CSV files.
    #[arg(long)]
    pub plots: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("linear program {0}")]
    Lp(LpStatus),
    #[error("{0}")]
    Library(crate::Error),
    #[error("self-check failed: {0}")]
    SelfCheck(String),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl From<crate::Error> for AppError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Lp(status) => AppError::Lp(status),
            other => AppError::Library(other),
        }
    }
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io(_) => 1,
            AppError::Config(_) | AppError::Library(_) => 2,
            AppError::Lp(_) => 3,
            AppError::SelfCheck(_) => 4,
        }
    }
}

/// Runs `command` and returns the files written.
pub fn run(
    command: Command,
    config_path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    plots: bool,
) -> Result<Vec<PathBuf>, AppError> {
    let inputs = config::load(config_path)?;
    run_with(command, &inputs, out_dir, seed, plots)
}

/// As [`run`], with already resolved inputs.
pub fn run_with(
    command: Command,
    inputs: &Inputs,
    out_dir: &Path,
    seed: Option<u64>,
    plots: bool,
) -> Result<Vec<PathBuf>, AppError> {
    let seed = seed.unwrap_or(inputs.config.run.seed);
    let tables = match command {
        Command::Bounds => commands::bounds(inputs)?,
        Command::Hedge => commands::hedge(inputs, seed)?,
        Command::Density => commands::density_tables(inputs, seed)?,
        Command::Gooddeal => commands::gooddeal(inputs)?,
        Command::Sweep => commands::sweep(inputs)?,
        Command::Scalecheck => commands::scalecheck(inputs)?,
    };
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::with_capacity(tables.len());
    for (name, table) in &tables {
        written.push(table.write(out_dir, name)?);
    }
    if plots {
        let svgs = plot::render_all(out_dir, &written)?;
        written.extend(svgs);
    }
    Ok(written)
}

/// Parses arguments, runs, reports and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command, &cli.config, &cli.out, cli.seed, cli.plots) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

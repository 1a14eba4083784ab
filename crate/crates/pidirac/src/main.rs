//! `pidirac`: forward spectra, partial-inverse reconstructions and round-trip
//! experiments for the integro-differential Dirac system, driven by a flat
//! TOML config.
//!
//! Exit codes: 0 when all checks pass, 1 when a run completes but a check
//! fails, 2 for bad input, 3 for data inconsistent with the known part, 4 for
//! other numerical failures.

mod commands;
mod config;
mod error;
mod files;
mod kernels;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Overrides};
use crate::error::Result;
use crate::files::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "pidirac", version, about = "Forward and partial-inverse spectral solver for a Dirac system with convolution kernel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues, Δ samples and w of the configured kernel.
    Forward,
    /// Reconstruct the kernel on (a, π) from `known` and `subspectrum`.
    Invert,
    /// Generate a kernel, reconstruct it from its subspectrum and report the error.
    Roundtrip,
    /// Gram conditioning and completeness of the vector system of a subspectrum.
    BasisDiag,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Invert => "invert",
            Command::Roundtrip => "roundtrip",
            Command::BasisDiag => "basis-diag",
        }
    }
}

#[derive(Debug, Args)]
struct Flags {
    /// Flat TOML config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for random kernel families.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Grid points on [0, π] (raised to the next grid aligned with m).
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    /// Interval parameter, a = π − π/m.
    #[arg(long, global = true, value_name = "INT")]
    m: Option<usize>,
    /// Spectrum window |k| ≤ S (forward) or subspectrum window |s| ≤ S.
    #[arg(long, global = true, value_name = "S")]
    window: Option<usize>,
    /// Pass threshold for the relative reconstruction error.
    #[arg(long, global = true, value_name = "REAL")]
    tol: Option<f64>,
}

fn run(cli: &Cli) -> Result<bool> {
    let mut cfg = match &cli.flags.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let f = &cli.flags;
    cfg.apply(&Overrides { out: f.out.clone(), seed: f.seed, grid: f.grid, m: f.m, window: f.window, tol: f.tol });
    cfg.validate()?;
    let out = OutputDir::create(&cfg.out, cli.command.name(), cfg.hash())?;
    let result = match cli.command {
        Command::Forward => commands::forward(&cfg, &out),
        Command::Invert => commands::invert(&cfg, &out),
        Command::Roundtrip => commands::roundtrip(&cfg, &out),
        Command::BasisDiag => commands::basis_diag(&cfg, &out),
    };
    if let Err(e) = &result {
        // Best effort: the original error is what gets reported.
        let _ = out.summary(commands::failure_summary(e));
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 3 {
                eprintln!("note: a kernel with kinks also leaves a large head residual; see `head` and `head_tol`");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

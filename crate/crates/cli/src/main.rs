//! Command-line experiments for multivariate fractional Brownian motion.
//!
//! Exit codes: 0 success, 1 runtime failure or failed verification,
//! 2 invalid configuration or parameters, 3 circulant embedding failure.

mod commands;
mod config;
mod table;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::TheoryKind;
use config::ExperimentConfig;
use verify::Suite;

/// Configuration or argument rejected before any computation.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Invalid(pub String);

#[derive(Parser)]
#[command(name = "mfbm", version, about = "Simulation and wavelet analysis of multivariate fractional Brownian motion")]
struct Cli {
    /// Experiment configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Caps the number of worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate sample paths by circulant embedding
    Simulate,
    /// Continuous wavelet transform of a simulated or stored path
    Cwt,
    /// Tabulate theoretical quantities
    Theory {
        #[arg(value_enum)]
        kind: TheoryKind,
    },
    /// Monte Carlo estimates of wavelet and increment covariances and the cross-spectrum
    Estimate,
    /// Run a verification suite and write a JSON report
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Invalid>().is_some() {
        return 2;
    }
    match err.downcast_ref::<mfbm::Error>() {
        Some(mfbm::Error::Embedding(_)) => 3,
        Some(
            mfbm::Error::IndexOutOfRange { .. }
            | mfbm::Error::InvalidParams(_)
            | mfbm::Error::ParamsFile { .. }
            | mfbm::Error::Inadmissible { .. }
            | mfbm::Error::InvalidArgument(_)
            | mfbm::Error::InvalidWavelet(_)
            | mfbm::Error::InsufficientDecay { .. }
            | mfbm::Error::ScaleBelowResolution { .. }
            | mfbm::Error::ShiftNearBoundary { .. }
            | mfbm::Error::ZeroFrequency
            | mfbm::Error::NonUniformShifts,
        ) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let mut config = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out = out;
    }
    if let Some(n) = cli.threads.or(config.threads) {
        if n == 0 {
            return Err(Invalid("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let out = config.out.clone();
    std::fs::create_dir_all(&out).map_err(|e| Invalid(format!("cannot create output directory {}: {e}", out.display())))?;
    match cli.command {
        Command::Simulate => commands::simulate(&config, &out)?,
        Command::Cwt => commands::transform(&config, &out)?,
        Command::Theory { kind } => commands::theory(&config, kind, &out)?,
        Command::Estimate => commands::estimate(&config, &out)?,
        Command::Verify { suite } => return Ok(verify::run(suite, &out)?.passed),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

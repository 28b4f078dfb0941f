//! `cortexforge`: synthetic pair generation, mesh-to-SDF conversion,
//! surface fitting and evaluation.
//!
//! Exit status is 0 on success, 2 for usage or input errors and 3 when an
//! algorithm cannot produce a valid result.

mod config;
mod error;
mod eval;
mod fit;
mod inputs;
mod mesh2sdf;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult, EXIT_ALGORITHM};

#[derive(Debug, Parser)]
#[command(name = "cortexforge", version, about)]
struct Cli {
    /// TOML pipeline config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Debug logging, including per-iteration fit energies.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Synth(synth::SynthArgs),
    Mesh2sdf(mesh2sdf::Mesh2SdfArgs),
    Fit(fit::FitArgs),
    Eval(eval::EvalArgs),
}

fn init_logging(verbose: bool) {
    let level = if verbose { log::LevelFilter::Debug } else { log::LevelFilter::Info };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("CORTEXFORGE_LOG")
        .format_timestamp_millis()
        .format_target(false)
        .target(env_logger::Target::Stderr)
        .init();
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot size the worker pool: {e}")))?;
    }
    let config = PipelineConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth(a) => synth::run(a, &config),
        Command::Mesh2sdf(a) => mesh2sdf::run(a, &config),
        Command::Fit(a) => fit::run(a, &config),
        Command::Eval(a) => eval::run(a, &config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let outcome = std::panic::catch_unwind(|| run(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            log::error!("{e}");
            ExitCode::from(e.code)
        }
        Err(_) => {
            log::error!("internal error (panic); this is a bug");
            ExitCode::from(EXIT_ALGORITHM)
        }
    }
}

mod cache;
mod commands;
mod error;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::cache::Cache;
use crate::commands::Context;
use crate::error::{code, AppError};
use crate::scenario::Scenario;

/// Bubbles, reduction constants, Green functions, reduced energies and
/// direct radial solves for slightly critical Lane-Emden systems.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true, env = "LANE_EMDEN_SCENARIO")]
    scenario: Option<PathBuf>,
    /// Output directory; defaults to the scenario's `output`, then `out`.
    #[arg(long, global = true, env = "LANE_EMDEN_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for the parallel parts.
    #[arg(long, global = true, env = "LANE_EMDEN_THREADS")]
    threads: Option<usize>,
    /// Directory of the content-addressed artifact cache.
    #[arg(long, global = true, env = "LANE_EMDEN_CACHE")]
    cache: Option<PathBuf>,
    /// Treat a large dropped remainder in `reduce` as an error.
    #[arg(long, global = true, env = "LANE_EMDEN_STRICT")]
    strict: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Derived exponents and their identities.
    Exponents,
    /// Ground-state bubble by shooting.
    Bubble,
    /// Reduction constants from the bubble.
    Constants,
    /// Numerical Green machinery against closed forms.
    GreenValidate,
    /// Minimize the reduced energy over peak configurations.
    Reduce,
    /// Continuation of the single-peak radial branch in epsilon.
    Solve,
    /// Identity suite; nonzero exit on any failure.
    Verify,
}

fn run(cli: &Cli) -> Result<bool, AppError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| AppError::Threads(e.to_string()))?;
    }
    let path = cli.scenario.as_ref().ok_or_else(|| {
        AppError::Config(scenario::ConfigError::Field { path: "--scenario".into(), message: "no scenario given".into() })
    })?;
    let sc = Scenario::load(path)?;
    let out = cli.out.clone().or_else(|| sc.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| "out".into());
    let ctx = Context { hash: sc.hash(), scenario: sc, out, cache: Cache::new(cli.cache.clone()), strict: cli.strict };
    match cli.command {
        Command::Exponents => commands::exponents(&ctx),
        Command::Bubble => commands::bubble(&ctx),
        Command::Constants => commands::constants(&ctx),
        Command::GreenValidate => commands::green_validate(&ctx),
        Command::Reduce => commands::reduce(&ctx),
        Command::Solve => commands::solve(&ctx),
        Command::Verify => commands::verify(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::from(code::OK),
        Ok(false) => ExitCode::from(code::CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

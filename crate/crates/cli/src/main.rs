//! `frachardy`: experiment runner for fractional Hardy problems.
//!
//! Exit codes: 0 all checks pass, 1 a check failed or a solver broke down,
//! 2 invalid input, 3 the request is ruled out by the theory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

use config::{Flags, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Forbidden(String),
    Failed(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Invalid(_) | CliError::Io(_) => 2,
            CliError::Forbidden(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Forbidden(m) => write!(f, "refused: {m}"),
            CliError::Failed(m) => write!(f, "computation failed: {m}"),
            CliError::Io(m) => write!(f, "cannot write output: {m}"),
        }
    }
}

impl From<frachardy::Error> for CliError {
    fn from(e: frachardy::Error) -> Self {
        use frachardy::Error as E;
        match e {
            E::Invalid(m) => CliError::Invalid(m),
            E::Domain(_) | E::Pole(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "frachardy", version, about = "Fractional Hardy constants, extension solvers and semilinear experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Hardy constants, kappa_s, Fourier factors and an optional alpha sweep
    Constants,
    /// Ground-state, backend, Poisson-mass, DtN, energy and maximum-principle checks
    Verify,
    /// Positive solution of the semilinear problem in the unit ball
    Solve,
    /// Near-origin behaviour of supersolutions and the critical integral
    Nonexistence,
    /// Rayleigh quotients over a trial family and the positive-supersolution test
    Hardy,
    /// Remainder ratio of the improved Hardy inequality over a trial family
    Remainder,
    /// Discrete extension of a Gaussian and its Dirichlet-to-Neumann trace
    Extend,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Verify => "verify",
            Command::Solve => "solve",
            Command::Nonexistence => "nonexistence",
            Command::Hardy => "hardy",
            Command::Remainder => "remainder",
            Command::Extend => "extend",
        }
    }
}

/// Worker threads in use.
pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FRACHARDY_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| CliError::Invalid(format!("FRACHARDY_THREADS={v:?} is not a positive integer")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Failed(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let started = std::time::SystemTime::now();
    configure_threads()?;
    let cfg = RunConfig::resolve(cli.command.name(), cli.flags)?;
    let out = match cli.command {
        Command::Constants => commands::constants(&cfg)?,
        Command::Verify => commands::verify(&cfg)?,
        Command::Solve => commands::solve(&cfg)?,
        Command::Nonexistence => commands::nonexistence(&cfg)?,
        Command::Hardy => commands::hardy(&cfg)?,
        Command::Remainder => commands::remainder(&cfg)?,
        Command::Extend => commands::extend(&cfg)?,
    };
    output::emit(&cfg, out, started)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

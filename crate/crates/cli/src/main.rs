//! `fairalloc` command-line tool.

mod commands;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Solver(#[from] fairalloc::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("verification failed: {0}")]
    Mismatch(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Mismatch(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fairalloc", version, about = "Fair allocation of a budget across groups with random demand")]
struct Cli {
    /// Budget residual tolerance for the bisection solvers, relative to max(1, budget)
    #[arg(long, global = true, env = "FAIRALLOC_TOL", default_value_t = 1e-9)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    /// Maximize expected utilization
    Max,
    /// Maximize utilization subject to a fairness gap of at most --epsilon
    Fair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Discrete,
    Fractional,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a scenario for a max-utilization or ε-fair allocation
    Solve {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Objective::Max)]
        objective: Objective,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Cross-check the result against a brute-force oracle
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Price of Fairness of a scenario and the applicable upper bounds
    Pof {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Write an adversarial scenario whose Price of Fairness exceeds --rho
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        rho: f64,
        /// Fairness level (discrete construction only)
        #[arg(long)]
        epsilon: Option<f64>,
        /// Budget multiplier for the fair side (fractional construction only)
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Demand probability of the first group (fractional construction only)
        #[arg(long, default_value_t = 0.5)]
        p1: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of utilization and service probabilities
    Simulate {
        scenario: PathBuf,
        /// Comma-separated amounts, one per group
        #[arg(long)]
        allocation: String,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Check whether the demand CDFs are rescalings of each other
    CheckFamily {
        scenario: PathBuf,
        #[arg(long, default_value_t = 64)]
        grid_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let opts = fairalloc::SolveOptions {
        budget_tol: cli.tol,
        ..fairalloc::SolveOptions::default()
    };
    match cli.command {
        Command::Solve {
            scenario,
            objective,
            epsilon,
            verify,
            out,
            format,
        } => commands::solve(&scenario, objective, epsilon, verify, &opts, out.as_deref(), format),
        Command::Pof {
            scenario,
            epsilon,
            out,
            format,
        } => commands::pof(&scenario, epsilon, out.as_deref(), format),
        Command::Generate {
            kind,
            rho,
            epsilon,
            k,
            p1,
            out,
        } => commands::generate(kind, rho, epsilon, k, p1, out.as_deref()),
        Command::Simulate {
            scenario,
            allocation,
            reps,
            seed,
            out,
            format,
        } => commands::simulate(&scenario, &allocation, reps, seed, out.as_deref(), format),
        Command::CheckFamily {
            scenario,
            grid_points,
            out,
        } => commands::check_family(&scenario, grid_points, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Batch front end for Gabor frame diagnostics, dual atoms, reconstruction
//! experiments, amalgam norm tables and shift-operator algebra.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 not a frame or singular
//! operator, 4 convergence failure.

// `!(a > b)` is used on purpose so that NaN fails every gate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gabor_amalgam::GaborError;

mod commands;
mod config;

use config::CommonArgs;

/// Caps the number of worker threads.
const THREADS_ENV: &str = "GABOR_AMALGAM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "gabor-amalgam",
    version,
    about = "Gabor frames, amalgam norms and Walnut-operator inversion on periodic grids"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Frame bounds of the multi-window system
    Bounds,
    /// Dual atoms, inverse decay profile and optional continuity table
    Dual,
    /// Reconstruction error table over (N, M)
    Reconstruct {
        /// Signal file (CSV index,re,im or JSON)
        #[arg(long, value_name = "PATH")]
        signal: PathBuf,
        /// Time truncation(s) N, comma separated [default: full]
        #[arg(long = "n", value_name = "N,...")]
        n: Option<String>,
        /// Frequency truncation(s) M, comma separated [default: full]
        #[arg(long = "m", value_name = "M,...")]
        m: Option<String>,
    },
    /// Amalgam and coefficient sequence norms of a signal
    Norms {
        /// Signal file (CSV index,re,im or JSON)
        #[arg(long, value_name = "PATH")]
        signal: PathBuf,
    },
    /// Operations on a serialized shift operator
    Algebra {
        /// Operator file (JSON)
        #[arg(long, value_name = "PATH")]
        operator: PathBuf,
        #[arg(long, value_enum)]
        action: Action,
        /// Right-hand operand for `compose`
        #[arg(long, value_name = "PATH")]
        other: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Action {
    Compose,
    Adjoint,
    Invert,
    Norm,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Library(GaborError),
}

impl From<GaborError> for CliError {
    fn from(e: GaborError) -> Self {
        CliError::Library(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Library(e) => match e {
                GaborError::NotAFrame { .. } | GaborError::SingularOperator { .. } | GaborError::NotSelfAdjoint(_) => 3,
                GaborError::NotConverged { .. } | GaborError::IdentityCheckFailed { .. } => 4,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Library(e) => write!(f, "{e}"),
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let settings = config::Settings::resolve(&cli.common)?;
    match cli.command {
        Command::Bounds => commands::bounds(&settings),
        Command::Dual => commands::dual(&settings),
        Command::Reconstruct { signal, n, m } => commands::reconstruct(&settings, &signal, n.as_deref(), m.as_deref()),
        Command::Norms { signal } => commands::norms(&settings, &signal),
        Command::Algebra {
            operator,
            action,
            other,
        } => commands::algebra(&settings, &operator, action, other.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gabor-amalgam: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

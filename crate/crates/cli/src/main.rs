//! `vck-lab`: experiments on higher-arity VC dimension, box norms and
//! low-arity decompositions.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::Value;

use report::{Meta, Report};

pub const EXIT_INVALID: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INVALID, message: message.into() }
    }
}

impl From<vck_core::Error> for CliError {
    fn from(e: vck_core::Error) -> Self {
        use vck_core::Error as E;
        let code = match &e {
            E::ResourceLimit(_) => EXIT_RESOURCE,
            E::NumericalFailure(_) | E::DiagnosticFailure { .. } => EXIT_NUMERICAL,
            E::InvalidArgument(_) | E::InvalidState(_) | E::Json(_) | E::Io(_) => EXIT_INVALID,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::invalid(format!("json: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::invalid(format!("io: {e}"))
    }
}

/// What a command hands back for the report.
pub struct Outcome {
    pub seed: Option<u64>,
    pub config: Value,
    pub results: Value,
    /// Exit code to use after the report is written.
    pub exit: u8,
    /// The command already wrote a table to standard output, so the report
    /// is only written when `--report` names a file.
    pub stdout_taken: bool,
}

#[derive(Parser, Debug)]
#[command(name = "vck-lab", version, about)]
struct Cli {
    /// Worker threads for parallel library operations.
    #[arg(long, global = true, env = "VCK_LAB_THREADS")]
    threads: Option<usize>,
    /// JSON object with the command's parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where to write the JSON report (default: standard output).
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance file.
    Gen(commands::gen::GenArgs),
    /// Exact VC_k dimension with a certificate.
    Vcdim(commands::vcdim::VcdimArgs),
    /// Partite box norm of a function.
    Gowers(commands::gowers::GowersArgs),
    /// Fiber family, its atoms and projections onto them.
    Fibers(commands::fibers::FibersArgs),
    /// Fit a low-arity cylinder decomposition.
    Decompose(commands::decompose::DecomposeArgs),
    /// Quasirandomness sweep over random patterns.
    Adversary(commands::adversary::AdversaryArgs),
    /// Check a shattering certificate against an instance.
    Verify(commands::verify::VerifyArgs),
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let threads = match cli.threads {
        Some(0) => return Err(CliError::invalid("--threads must be positive")),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::invalid(format!("thread pool: {e}")))?;
            n
        }
        None => rayon::current_num_threads(),
    };
    let file = cli.config.as_deref().map(config::load).transpose()?;
    let file = file.as_ref();
    let start = Instant::now();
    let (name, out) = match &cli.command {
        Command::Gen(a) => ("gen", commands::gen::run(a, file)?),
        Command::Vcdim(a) => ("vcdim", commands::vcdim::run(a, file)?),
        Command::Gowers(a) => ("gowers", commands::gowers::run(a, file)?),
        Command::Fibers(a) => ("fibers", commands::fibers::run(a, file)?),
        Command::Decompose(a) => ("decompose", commands::decompose::run(a, file)?),
        Command::Adversary(a) => ("adversary", commands::adversary::run(a, file)?),
        Command::Verify(a) => ("verify", commands::verify::run(a, file)?),
    };
    let report = Report {
        command: name.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: out.seed,
        config: out.config,
        results: out.results,
        meta: Meta { wall_time_ms: start.elapsed().as_secs_f64() * 1e3, threads },
    };
    if cli.report.is_some() || !out.stdout_taken {
        report.emit(cli.report.as_deref())?;
    }
    Ok(out.exit)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("vck-lab: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

//! Command-line experiment runner.
//!
//! Every command prints a few report lines and finishes with one
//! machine-parsable line, `RESULT ok` or
//! `RESULT error kind=<kind> code=<exit code> reason="<message>"`.

mod commands;
pub mod config;
mod demo;

pub use config::Config;

use crate::error::Error;
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable overriding the output directory of the config
/// (but not `--out`).
pub const OUT_ENV: &str = "YAMABE_LAB_OUT";

#[derive(Debug, Parser)]
#[command(name = "yamabe-lab", version, about = "Yamabe quotients along Ricci flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML config; defaults are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweep entries.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Curvature of the configured metric.
    Curvature,
    /// Solve the (sub)critical Euler-Lagrange system.
    Yamabe,
    /// Integrate Ricci flow and check the evolution identities.
    Flow,
    /// Compare dY/dt along the flow with its closed-form right-hand side.
    Verify,
    /// Symmetric spectrum of the Laplacian and the eigenvalue test.
    Spectrum,
    /// Run the built-in scenarios and print a scoreboard.
    Demo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Curvature => "curvature",
            Command::Yamabe => "yamabe",
            Command::Flow => "flow",
            Command::Verify => "verify",
            Command::Spectrum => "spectrum",
            Command::Demo => "demo",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Config(String),
    #[error("{kind}: {reason}")]
    Numerical { kind: &'static str, reason: String },
    /// A check ran to completion but missed its tolerance.
    #[error("{0}")]
    Check(String),
    #[error("{0}")]
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical { .. } | Failure::Check(_) => 3,
            Failure::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config",
            Failure::Numerical { kind, .. } => kind,
            Failure::Check(_) => "tolerance",
            Failure::Io(_) => "io",
        }
    }

    fn reason(&self) -> String {
        match self {
            Failure::Numerical { reason, .. } => reason.clone(),
            other => other.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            return Failure::Config(e.to_string());
        }
        let kind = match e.root() {
            Error::Io(_) | Error::Csv(_) => return Failure::Io(e.to_string()),
            Error::SolverDiverged { .. } => "solver_diverged",
            Error::IndefiniteOperator { .. } => "indefinite_operator",
            Error::CflViolated { .. } => "cfl_violated",
            Error::NeckpinchDetected { .. } => "neckpinch",
            Error::ParameterBlowup { .. } => "parameter_blowup",
            Error::NormalizationViolated { .. } => "normalization",
            Error::GridTooCoarse { .. } => "grid_too_coarse",
            Error::InsufficientSnapshots { .. } => "insufficient_snapshots",
            Error::NonPositiveWarp { .. } | Error::PoleClosureViolated { .. } => "invalid_metric",
            Error::NonPositiveTestFunction => "non_positive",
            Error::Inapplicable(_) => "inapplicable",
            Error::WrongBackend(_) => "wrong_backend",
            _ => "numerical",
        };
        Failure::Numerical {
            kind,
            reason: e.to_string(),
        }
    }
}

/// The last line of every run.
pub fn result_line(outcome: &Result<(), Failure>) -> String {
    match outcome {
        Ok(()) => "RESULT ok".into(),
        Err(f) => format!(
            "RESULT error kind={} code={} reason={:?}",
            f.kind(),
            f.exit_code(),
            f.reason().replace('\n', " ")
        ),
    }
}

/// `--out`, then the environment, then the config.
fn output_dir(cli: &Cli, cfg: &Config) -> PathBuf {
    if let Some(out) = &cli.out {
        return out.clone();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cfg.output.dir.clone(),
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if cli.jobs == 0 {
        return Err(Failure::Config("--jobs must be at least 1".into()));
    }
    cfg.output.dir = output_dir(cli, &cfg);
    let out = cfg.output.dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    write_manifest(&out, cli.command, &cfg)?;
    let mut lines = Vec::new();
    let outcome = match cli.command {
        Command::Demo => demo::run(&out, &mut lines),
        cmd => commands::run(cmd, &cfg, &out, cli.jobs, &mut lines),
    };
    for l in lines {
        println!("{l}");
    }
    outcome
}

#[derive(serde::Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a Config,
}

fn write_manifest(out: &Path, command: Command, cfg: &Config) -> Result<(), Failure> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        seed: cfg.seed,
        config: cfg,
    };
    let text = toml::to_string(&manifest).expect("manifest serializes");
    crate::io::write_text_atomic(&out.join("manifest.toml"), &text)?;
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> ExitCode {
    let outcome = execute(cli);
    if let Err(f) = &outcome {
        println!("error: {f}");
    }
    println!("{}", result_line(&outcome));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => ExitCode::from(f.exit_code()),
    }
}

/// Parses `std::env::args` and runs; argument errors exit with code 2.
pub fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => run(&cli),
        Err(e) => {
            if !e.use_stderr() {
                // --help and --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let first = e.to_string();
            let first = first.lines().next().unwrap_or_default().trim_start_matches("error: ");
            let failure = Failure::Config(first.to_string());
            println!("{}", result_line(&Err(failure)));
            ExitCode::from(2)
        }
    }
}

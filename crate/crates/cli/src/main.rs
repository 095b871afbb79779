//! `fraclab`: run simulations, certify barriers, build bumps, sweep and fit.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fraclab::LabError;
use thiserror::Error;

use crate::config::Kind;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("certification not obtained: {0}")]
    Certification(String),
    #[error("sweep: {message}")]
    Sweep { code: u8, message: String },
}

impl CliError {
    /// 0 ok, 1 config, 2 saturation, 3 stability, 4 window, 5 construction.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Lab(e) => match e {
                LabError::Contract(_) | LabError::Data(_) => 1,
                LabError::Saturation(_) => 2,
                LabError::Stability(_) => 3,
                LabError::Window(_) => 4,
                LabError::Calibration { .. }
                | LabError::Construction { .. }
                | LabError::Estimation(_)
                | LabError::Internal(_) => 5,
            },
            CliError::Certification(_) => 5,
            CliError::Sweep { code, .. } => *code,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Experiment config (JSON, schema version 1).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Concurrent runs for `sweep`.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Multiplies quadrature resolution for certification and bump checks.
    #[arg(long)]
    pub quad_scale: Option<f64>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Parser)]
#[command(name = "fraclab", version, about = "Fractional reaction-diffusion front lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the solver and track level sets.
    Simulate(Flags),
    /// Check barriers against the equation.
    Certify(Flags),
    /// Build and certify an ignition bump.
    Bump(Flags),
    /// Run several simulate configs concurrently.
    Sweep(Flags),
    /// Fit a growth law to a recorded series.
    Fit(Flags),
}

fn dispatch(command: &Command) -> Result<String, CliError> {
    let (flags, kind) = match command {
        Command::Simulate(f) => (f, Kind::Simulate),
        Command::Certify(f) => (f, Kind::Certify),
        Command::Bump(f) => (f, Kind::Bump),
        Command::Sweep(f) => (f, Kind::Sweep),
        Command::Fit(f) => (f, Kind::Fit),
    };
    let prepared = commands::prepare(&flags.config, flags, kind)?;
    match kind {
        Kind::Simulate => commands::simulate(&prepared, flags),
        Kind::Certify => commands::certify_cmd(&prepared),
        Kind::Bump => commands::bump(&prepared),
        Kind::Sweep => commands::sweep(&prepared, flags),
        Kind::Fit => commands::fit(&prepared),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fraclab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

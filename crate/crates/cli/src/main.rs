//! `xtalk`: run the readout side-channel pipeline from an experiment spec.

mod commands;
mod plot;
mod spec;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "xtalk",
    version,
    about = "Readout-crosstalk side-channel experiments"
)]
struct Cli {
    /// Experiment spec (TOML).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Global seed; overrides the spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the spec.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plots: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Simulate one trace file per preparation.
    Simulate,
    /// Fit a discriminator on the training shots and discriminate the rest.
    Discriminate,
    /// Estimate flip tables and run the SVM attack for every configuration.
    Attack,
    /// Evaluate the configured defenses.
    Defend,
    /// Summarise the outputs present in the output directory.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Discriminate => "discriminate",
            Command::Attack => "attack",
            Command::Defend => "defend",
            Command::Report => "report",
        }
    }
}

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

impl CliError {
    pub fn validation(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }

    /// Core error with a prefix naming what failed.
    pub fn context(context: impl fmt::Display, e: xtalk_core::Error) -> CliError {
        let code = if e.is_validation() {
            EXIT_VALIDATION
        } else {
            EXIT_RUNTIME
        };
        CliError {
            code,
            message: format!("{context}: {e}"),
        }
    }
}

impl From<xtalk_core::Error> for CliError {
    fn from(e: xtalk_core::Error) -> Self {
        let code = if e.is_validation() {
            EXIT_VALIDATION
        } else {
            EXIT_RUNTIME
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        xtalk_core::Error::from(e).into()
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::validation("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    let spec = match &cli.spec {
        Some(path) => Some(spec::ExperimentSpec::load(path, cli.seed, cli.out.clone())?),
        None => None,
    };
    let need_spec = || {
        spec.as_ref()
            .ok_or_else(|| CliError::validation(format!("{} needs --spec", cli.command.name())))
    };
    match cli.command {
        Command::Simulate => commands::simulate(need_spec()?),
        Command::Discriminate => commands::discriminate(need_spec()?),
        Command::Attack => commands::attack(need_spec()?, cli.plots),
        Command::Defend => commands::defend(need_spec()?),
        Command::Report => {
            let out = match (&spec, &cli.out) {
                (Some(s), _) => s.out.clone(),
                (None, Some(o)) => o.clone(),
                (None, None) => return Err(CliError::validation("report needs --spec or --out")),
            };
            commands::report(&out, spec.as_ref(), cli.plots)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

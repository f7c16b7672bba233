//! Command-line front end for the spectral toolkit.
//!
//! The binary parses arguments, sizes the worker pool, and hands a parsed
//! JSON config to one of the command pipelines in [`commands`]. Everything
//! but argument parsing lives in this library so the integration tests can
//! run the pipelines in-process.

pub mod commands;
pub mod config;
pub mod format;
pub mod manifest;
pub mod svg;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{CommandName, RunConfig};

/// Everything that can stop a run. Invariant failures carry the name of the
/// violated invariant so the exit message identifies it directly.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Core(liouvspec::Error),
    InvariantViolated { name: &'static str, detail: String },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config: {msg}"),
            CliError::Io(msg) => write!(f, "io: {msg}"),
            CliError::Core(err) => write!(f, "{err}"),
            CliError::InvariantViolated { name, detail } => {
                write!(f, "invariant violated: {name}: {detail}")
            }
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Core(err) => Some(err),
            _ => None,
        }
    }
}

impl From<liouvspec::Error> for CliError {
    fn from(err: liouvspec::Error) -> Self {
        CliError::Core(err)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "liouvspec",
    version,
    about = "Steady states, Liouvillian spectra, and spectral functions of the quantum van der Pol oscillator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,

    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Worker thread count. Falls back to LIOUVSPEC_THREADS, then to the
    /// number of cores.
    #[arg(long)]
    pub threads: Option<usize>,

    /// Also render SVG plots of the CSV artifacts.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Diagonal steady-state populations with an independent cross-check.
    SteadyState(CommonArgs),
    /// Retarded/Keldysh functions, spectral function, and pole table.
    Spectrum(CommonArgs),
    /// Lifetime and beyond-lifetime approximations next to the exact result.
    Perturbative(CommonArgs),
    /// Negative-density-of-states sweep over the pump-interaction plane.
    PhaseDiagram(CommonArgs),
    /// Raw Liouvillian eigenvalues by charge sector.
    Eigvals(CommonArgs),
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::SteadyState(args)
            | Command::Spectrum(args)
            | Command::Perturbative(args)
            | Command::PhaseDiagram(args)
            | Command::Eigvals(args) => args,
        }
    }

    pub fn name(&self) -> CommandName {
        match self {
            Command::SteadyState(_) => CommandName::SteadyState,
            Command::Spectrum(_) => CommandName::Spectrum,
            Command::Perturbative(_) => CommandName::Perturbative,
            Command::PhaseDiagram(_) => CommandName::PhaseDiagram,
            Command::Eigvals(_) => CommandName::Eigvals,
        }
    }
}

/// Thread count from the flag, else from LIOUVSPEC_THREADS. An unparsable
/// environment value is an error rather than a silent default.
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("LIOUVSPEC_THREADS") {
        Ok(text) => text.trim().parse::<usize>().map(Some).map_err(|_| {
            CliError::Config(format!(
                "LIOUVSPEC_THREADS must be a nonnegative integer, got {text:?}"
            ))
        }),
        Err(_) => Ok(None),
    }
}

/// Load the config, run the requested pipeline, and write the manifest.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let common = cli.command.common();
    let text = std::fs::read_to_string(&common.config).map_err(|err| {
        CliError::Io(format!(
            "cannot read config {}: {err}",
            common.config.display()
        ))
    })?;
    let config = RunConfig::from_json(&text)?;
    std::fs::create_dir_all(&common.out).map_err(|err| {
        CliError::Io(format!(
            "cannot create output directory {}: {err}",
            common.out.display()
        ))
    })?;

    let manifest = match cli.command.name() {
        CommandName::SteadyState => commands::cmd_steady_state(&config, &common.out, common.svg)?,
        CommandName::Spectrum => commands::cmd_spectrum(&config, &common.out, common.svg)?,
        CommandName::Perturbative => commands::cmd_perturbative(&config, &common.out, common.svg)?,
        CommandName::PhaseDiagram => commands::cmd_phase_diagram(&config, &common.out, common.svg)?,
        CommandName::Eigvals => commands::cmd_eigvals(&config, &common.out, common.svg)?,
    };
    manifest.write(&common.out)?;
    Ok(())
}

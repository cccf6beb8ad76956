//! Command-line front end for `resfluor`.
//!
//! Exit status: 0 on success, 2 for configuration or usage errors, 3 when
//! the model or a numerical stage rejects the inputs, 4 for I/O failures.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod repro;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Context;
pub use config::ScenarioConfig;
pub use error::{CliError, CliResult};
pub use output::{Format, Table};

#[derive(Debug, Parser)]
#[command(
    name = "resfluor",
    version,
    about = "Resonance fluorescence of a driven two-level emitter"
)]
pub struct Cli {
    /// Scenario file (TOML). Optional for `repro`, which defaults to the
    /// published parameters.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for the stochastic commands, overriding `stochastic.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Table format, overriding `output.format`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Cavity scan of the emission (spectrum.csv).
    Spectrum,
    /// Michelson fringe visibility against delay (g1.csv).
    G1,
    /// Ideal and instrument-convolved intensity correlation (g2.csv).
    G2,
    /// Monte Carlo photon streams behind a beam splitter (stream_a.txt, stream_b.txt).
    Stream,
    /// Correlation histogram of two streams (hist.csv).
    Hist {
        /// The two stream files; defaults to those `stream` writes.
        streams: Vec<PathBuf>,
    },
    /// Least-squares fit described by the [fit] block (fit.json).
    Fit,
    /// Signal, background and their ratio against power (sbr.csv).
    Sbr,
    /// All figure data plus summary.json.
    Repro,
}

/// Runs one subcommand and returns the files written.
pub fn run(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let cfg = match (&cli.config, &cli.command) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, Command::Repro) => ScenarioConfig::published(),
        (None, _) => return Err(CliError::config("--config <path> is required")),
    };
    let ctx = Context {
        out: cli.out.clone().unwrap_or_else(|| cfg.resolve(&cfg.output.dir)),
        format: cli.format.unwrap_or(cfg.output.format),
        seed: cli.seed,
    };
    match &cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &ctx),
        Command::G1 => commands::g1(&cfg, &ctx),
        Command::G2 => commands::g2(&cfg, &ctx),
        Command::Stream => commands::stream(&cfg, &ctx),
        Command::Hist { streams } => commands::hist(&cfg, &ctx, streams),
        Command::Fit => commands::fit_command(&cfg, &ctx),
        Command::Sbr => commands::sbr(&cfg, &ctx),
        Command::Repro => repro::repro(&cfg, &ctx).map(|(files, _)| files),
    }
}

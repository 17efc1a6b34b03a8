//! Library behind the `qisim` binary: configuration, commands and artifact
//! emission.

pub mod checks;
pub mod commands;
pub mod config;
pub mod model;
pub mod output;

use std::path::Path;

use config::RunConfig;
use output::{ArtifactWriter, OutputRecord};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] qisim_core::Error),
    #[error("every sweep point failed: {0}")]
    Sweep(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{} check(s) failed: {}", .0.len(), .0.join(", "))]
    Checks(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(_) | CliError::Sweep(_) => 3,
            CliError::Checks(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Visibility,
    Timedist,
    Eit,
    Store,
    Bell,
    G13,
    ReproduceAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Visibility => "visibility",
            Command::Timedist => "timedist",
            Command::Eit => "eit",
            Command::Store => "store",
            Command::Bell => "bell",
            Command::G13 => "g13",
            Command::ReproduceAll => "reproduce-all",
        }
    }
}

/// Runs one command into `out` and writes its manifest. A failed check in
/// `reproduce-all` is reported as [`CliError::Checks`] after all artifacts
/// and the manifest are written.
pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<Vec<OutputRecord>, CliError> {
    let mut w = ArtifactWriter::create(out, cfg.output.formats)?;
    let mut failures = Vec::new();
    match command {
        Command::Visibility => {
            commands::visibility(cfg, &mut w)?;
        }
        Command::Timedist => {
            commands::timedist(cfg, &mut w)?;
        }
        Command::Eit => {
            commands::eit(cfg, &mut w)?;
        }
        Command::Store => {
            commands::store(cfg, &mut w)?;
        }
        Command::Bell => {
            commands::bell(cfg, &mut w)?;
        }
        Command::G13 => {
            commands::g13(cfg, &mut w)?;
        }
        Command::ReproduceAll => {
            commands::visibility(cfg, &mut w)?;
            let timedist = commands::timedist(cfg, &mut w)?;
            let eit = commands::eit(cfg, &mut w)?;
            let store = commands::store(cfg, &mut w)?;
            let bell = commands::bell(cfg, &mut w)?;
            let g13 = commands::g13(cfg, &mut w)?;
            let summaries = checks::Summaries { timedist: &timedist, eit: &eit, store: &store, bell: &bell, g13: &g13 };
            let report = checks::run(cfg, &summaries)?;
            w.json("checks.json", &report)?;
            failures = report.failures;
        }
    }
    let records = w.finish(command.name(), cfg)?;
    if failures.is_empty() {
        Ok(records)
    } else {
        Err(CliError::Checks(failures))
    }
}

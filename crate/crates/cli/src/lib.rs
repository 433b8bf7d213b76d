//! Config-driven experiments over the `gns-lattice` library.

pub mod commands;
pub mod config;
pub mod error;
pub mod oracle;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, Overrides};
pub use error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    SectorOverlap,
    TimeReversalDemo,
    Evolve,
    MasterEq,
    OracleCheck,
}

pub fn run(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::SectorOverlap => commands::sector_overlap(cfg, out),
        Command::TimeReversalDemo => commands::time_reversal_demo(cfg, out),
        Command::Evolve => commands::evolve(cfg, out),
        Command::MasterEq => commands::master_eq(cfg, out),
        Command::OracleCheck => commands::oracle_check(cfg, out),
    }
}

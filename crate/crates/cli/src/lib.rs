//! Command-line front end for the casched simulator: scenario files on
//! disk, run orchestration, and CSV/JSON artifact emission.
//!
//! * [`config`] — the TOML scenario schema and its mapping to core types.
//! * [`output`] — deterministic artifact writers (12 significant digits,
//!   LF line endings, byte-identical across reruns).
//! * [`commands`] — the `run` and `compare` entry points the binary calls.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use casched_core::scheduler::SimulationError;
use thiserror::Error;

pub use commands::{cmd_compare, cmd_run, CompareReport, Overrides, RunReport};
pub use config::{load_scenario, save_scenario, ConfigError, ScenarioFile};

/// Errors surfaced by the command layer.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("unknown {what} {got:?}; expected one of {expected}")]
    BadChoice {
        what: &'static str,
        got: String,
        expected: &'static str,
    },
}

//! Command-line driver: JSON configuration, single runs, parameter sweeps,
//! the validation suite, and CSV/JSON artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use error::{CliError, Result};

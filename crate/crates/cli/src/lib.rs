//! Library side of the `gossip` experiment runner: configuration, the three
//! subcommands and their CSV output.

pub mod commands;
pub mod config;
pub mod csv;

use std::fmt;

pub use commands::{cmd_rate, cmd_run, cmd_speedup, RateSummary, RunSummary};
pub use config::{CInit, ExperimentConfig, RawConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration; `field` names the offending setting.
    Usage { field: &'static str, message: String },
    Core(gossip_core::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn usage(field: &'static str, message: impl Into<String>) -> Self {
        CliError::Usage {
            field,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage { field, message } => write!(f, "invalid {field}: {message}"),
            CliError::Core(e) => e.fmt(f),
            CliError::Io(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gossip_core::Error> for CliError {
    fn from(e: gossip_core::Error) -> Self {
        match e {
            gossip_core::Error::Io(io) => CliError::Io(io),
            other => CliError::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

//! Library half of the `gyrsim` command-line tool: config parsing and
//! resolution, deterministic output assembly, and the subcommand
//! implementations. The binary in `main.rs` is a thin wrapper so the whole
//! pipeline stays testable in-process.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

/// Errors grouped by exit code: 2 for configuration problems, 3 for
/// numerical failures, 4 for I/O.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Numerical(m) => write!(f, "numerical: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

//! Command-line front end for the `bubble-bs` pricer.
//!
//! The binary is a thin clap layer over [`commands`]; configuration and
//! rendering live in [`config`] and [`output`] so they can be tested directly.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad input: exit code 2.
    Validation(String),
    /// A numerical guard (pole or stiffness) tripped on a single run: exit code 3.
    Numerical(String),
    /// Filesystem or serialization failure: exit code 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<bubble_bs::Error> for CliError {
    fn from(e: bubble_bs::Error) -> Self {
        if e.is_numerical_guard() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

//! Experiment runner behind the `nclab` binary.
//!
//! A run reads one JSON [`config::ExperimentConfig`], evaluates the requested
//! mode and writes CSV tables whose `#` header records the library version
//! and a hash of the resolved config.

pub mod config;
pub mod output;
pub mod run;
pub mod verify;

use std::fmt;

/// Why a run stopped. The variant decides the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable, malformed or inconsistent configuration.
    Config(String),
    /// A numerical routine failed or a check did not hold.
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<nclab_core::Error> for Failure {
    fn from(e: nclab_core::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

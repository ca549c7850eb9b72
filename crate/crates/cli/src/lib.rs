//! Command-line front end: configuration, subcommands and output encodings.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => exit::CONFIG,
            CliError::Numerical(_) => exit::NUMERICAL,
        }
    }
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const VALIDATION: i32 = 4;
}

/// Thread count from `SLDONOGHUE_THREADS`; `None` leaves the rayon default.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("SLDONOGHUE_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("SLDONOGHUE_THREADS = {v:?} is not a positive integer"))),
        },
    }
}

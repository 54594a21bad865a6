//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by solvers, samplers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (bad field values, missing parameters,
    /// incompatible grids). Maps to CLI exit code 3.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside an operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Numerical failure during a run (NaN/Inf, CFL violation,
    /// excessive clipped mass). Maps to CLI exit code 4.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A diagnostic exceeded its configured tolerance. Maps to CLI
    /// exit code 2.
    #[error("tolerance breach: {0}")]
    Tolerance(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) => 3,
            Error::Numerical(_) => 4,
            Error::Tolerance(_) => 2,
            Error::Io(_) => 4,
        }
    }
}

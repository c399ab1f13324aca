use alloc::boxed::Box;
use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: need at least {min}")]
    InvalidDimension { dim: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("density matrix lost positivity at t = {time}: smallest eigenvalue {min_eigenvalue:e} (reduce the step or raise the truncation)")]
    PositivityViolation { time: f64, min_eigenvalue: f64 },

    #[error("truncation leak at t = {time}: population {population:e} in the top {levels} Fock levels (raise dim)")]
    TruncationLeak { time: f64, levels: usize, population: f64 },

    #[error("state norm collapsed to {norm:e} at t = {time} (step too large)")]
    NormCollapse { time: f64, norm: f64 },

    #[error("classical amplitude diverged (|alpha| = {amplitude:e}) at t = {time}")]
    Divergence { time: f64, amplitude: f64 },

    #[error("trajectory {index} failed: {source}")]
    Trajectory { index: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

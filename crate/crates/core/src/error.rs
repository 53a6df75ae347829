use thiserror::Error;

/// Errors shared across the game engine, strategies and oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("internal assertion failed: {0}")]
    Assertion(String),
    #[error("enumeration budget exceeded (verified up to q = {achieved})")]
    Budget { achieved: u64 },
    #[error("construction failed at node {node}: {reason}")]
    Construction { node: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

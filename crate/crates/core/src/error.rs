use thiserror::Error;

/// Errors raised by the simulation, control, and learning layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("expected {expected} items, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("duplicate UAV id {0}")]
    DuplicateId(u32),
    #[error("unknown UAV id {0}")]
    UnknownUav(u32),
    #[error("unknown group id {0}")]
    UnknownGroup(u32),
    #[error("assignment is not a permutation")]
    NotAPermutation,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("log error: {0}")]
    Log(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

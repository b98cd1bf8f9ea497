use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("simulation failed: {0}")]
    Simulation(#[from] heftva_core::Error),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl BenchError {
    /// Process exit status for this class of failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Validation(_) => 2,
            BenchError::Simulation(_) | BenchError::Io { .. } => 3,
            BenchError::Assertion(_) => 4,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        BenchError::Io { path: path.as_ref().display().to_string(), message: err.to_string() }
    }
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;

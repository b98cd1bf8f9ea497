use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("wire {wire} out of range for a {num_qubits}-qubit register")]
    InvalidWire { wire: usize, num_qubits: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("gate parameter error: {0}")]
    Parameter(String),

    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("optimizer diverged at step {step} (last finite energy {last_energy})")]
    Divergence { step: usize, last_energy: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("internal consistency violated: {0}")]
    Internal(String),
}

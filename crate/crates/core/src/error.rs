use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown system label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate system label `{0}`")]
    DuplicateLabel(String),
    #[error("empty system label")]
    EmptyLabel,
    #[error("system `{0}` has dimension 0")]
    ZeroDimension(String),
    #[error("not a permutation of the layout labels: {0}")]
    NotPermutation(String),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("subsystem groups overlap on `{0}`")]
    OverlappingParts(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("eigendecomposition did not converge")]
    EigenFailed,
    #[error("Koashi-Imoto decomposition failed: {0}")]
    Decomposition(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("factor index {index} out of range for {count} factors")]
    FactorIndex { index: usize, count: usize },
    #[error("time index out of range: {0}")]
    TimeRange(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("logarithm undefined: rotation angle {angle} is at the branch cut")]
    Singularity { angle: f64 },
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),
    #[error("channel `{0}` is not factor-local")]
    NotFactorLocal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

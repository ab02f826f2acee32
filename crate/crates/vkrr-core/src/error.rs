//! Error type shared by all modules.

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("input {value} is outside the kernel domain [0,1]")]
    DomainViolation { value: f64 },
    #[error("empty point set")]
    EmptyPoints,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("unsupported Matérn order {nu}; supported: 1/2, 3/2, 5/2")]
    UnsupportedMaternOrder { nu: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("operation requires a designed Mercer kernel")]
    NotDesignedKernel,
    #[error("spectral model has no declared eigenvalue decay law")]
    MissingDecayLaw,
    #[error("operands refer to different spectral models")]
    ModelMismatch,
    #[error("symmetric eigendecomposition did not converge")]
    EigenFailure,
    #[error("linear solve failed: {reason}")]
    SolveFailure { reason: String },
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

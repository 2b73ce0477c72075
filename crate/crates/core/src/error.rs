use thiserror::Error;

/// Errors raised by the classifier library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QdcError {
    /// Invalid or inconsistent configuration (bad angles, empty reservoir list, oversize system...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Operand shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A precondition of an operation was violated by its input (non-Hermitian generator, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The model has no defined value for this input (all couplings zero, unphysical steady state).
    #[error("undefined: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, QdcError>;

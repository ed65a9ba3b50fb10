use thiserror::Error;

/// Errors surfaced by instance construction, evaluation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// The requested value is undefined on the given inputs (e.g. an empty
    /// market with no competitor mass).
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Inconsistent or impossible configuration data.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A configured resource ceiling would be exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Inputs outside the representable numeric range.
    #[error("numeric range: {0}")]
    NumericRange(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A measure failed validation (weights, dimensions, emptiness).
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// A measure was expected to have zero barycenter.
    #[error("measure is not centered (|barycenter| = {0:e})")]
    NotCentered(f64),

    /// The requested dimension has no implementation.
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    /// A bracketing search was handed an interval that does not bracket.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// An iterative search failed to converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// An ordering or consistency check between computed quantities failed.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

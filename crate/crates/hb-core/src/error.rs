//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by code construction, encoding and decoding.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a precondition (range, length, normalization).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A distortion pair or config falls outside the region an operation
    /// is defined for.
    #[error("region error: {0}")]
    Region(String),

    /// Test-channel parameters produce a negative probability or leave the
    /// admissible domain.
    #[error("infeasible parameters: {0}")]
    InfeasibleParameter(String),

    /// A root-finder or optimizer failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An index is neither pinned nor decodable, or set sizes are
    /// inconsistent with the frame length.
    #[error("configuration error: {0}")]
    Config(String),

    /// Composing the claimed intermediate channel does not reproduce the
    /// degraded test channel.
    #[error("degradation violation: residual {residual}")]
    DegradationViolation { residual: f64 },

    /// Constructed sets violate a nesting invariant, which signals
    /// construction noise; increase the sample count.
    #[error("nesting violation: {0}")]
    NestingViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

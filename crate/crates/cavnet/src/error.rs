//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by construction, algebra, and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not match what the operation requires.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    /// A matrix that must be symmetric is not, beyond the stated tolerance.
    #[error("matrix not symmetric within {tol:e} (worst deviation {worst:e})")]
    NotSymmetric { tol: f64, worst: f64 },

    /// A scattering matrix that must be unitary is not, beyond the stated tolerance.
    #[error("scattering matrix not unitary within {tol:e} (worst deviation {worst:e})")]
    NotUnitary { tol: f64, worst: f64 },

    /// The drift matrix is not strictly Hurwitz, so no unique stationary state exists.
    #[error("drift matrix is {class}: no unique stationary covariance")]
    NonStationary { class: &'static str },

    /// No stabilizing initial iterate could be found for the Riccati solve.
    #[error("Riccati solve: no stabilizing initial iterate found")]
    RiccatiNoStabilizer,

    /// The Riccati iteration failed to reach the requested residual.
    #[error("Riccati iteration did not converge: residual {residual:e} after {iterations} steps")]
    RiccatiNotConverged { residual: f64, iterations: usize },

    /// A linear solve failed (singular system).
    #[error("linear solve failed in {context}")]
    SingularSystem { context: &'static str },

    /// A coordinate expected to decouple from the rest of the dynamics does not.
    #[error("coordinate {index} does not decouple: off-diagonal magnitude {worst:e} exceeds {tol:e}")]
    NotDecoupled { index: usize, worst: f64, tol: f64 },

    /// Integration produced non-finite values.
    #[error("integration diverged at t = {time}")]
    Diverged { time: f64 },

    /// A covariance matrix is invalid for the requested metric.
    #[error("invalid covariance: {reason}")]
    InvalidCovariance { reason: String },

    /// A parameter value is outside its admissible range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

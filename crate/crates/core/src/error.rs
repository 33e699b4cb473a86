//! Crate-wide error type.

use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A requested dimension exceeds the global guard (see
    /// [`crate::linalg::max_dim`] and the `OPSPACE_MAX_DIM` environment
    /// variable).
    #[error("dimension {dim} exceeds the guard {max} (set OPSPACE_MAX_DIM to raise it); while {context}")]
    DimensionGuard {
        /// Offending total dimension.
        dim: u128,
        /// Guard in effect.
        max: usize,
        /// What was being built.
        context: String,
    },

    /// Two objects that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix required to be Hermitian is not, beyond tolerance.
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {tol:.3e}")]
    NotHermitian {
        /// Measured ‖M − M†‖ relative defect.
        defect: f64,
        /// Allowed defect.
        tol: f64,
    },

    /// Power iteration failed to converge within the iteration cap.
    #[error("power iteration did not converge in {iterations} iterations (last Rayleigh iterates {previous:.17e}, {last:.17e})")]
    NonConvergence {
        /// Iteration cap that was hit.
        iterations: usize,
        /// Second-to-last Rayleigh estimate.
        previous: f64,
        /// Last Rayleigh estimate.
        last: f64,
    },

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An enumeration would exceed its documented size cap.
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

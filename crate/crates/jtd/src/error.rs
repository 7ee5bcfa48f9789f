//! Crate-wide error type.

use thiserror::Error;

/// Alias used throughout the crate.
pub type Result<T> = std::result::Result<T, JtdError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JtdError {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A result exceeds the representable floating-point range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// Model parameters violate an invariant required by the operation.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The requested measure change is not an equivalent measure
    /// (some induced intensity is not strictly positive).
    #[error("measure not equivalent: {0}")]
    MeasureNotEquivalent(String),

    /// Two-asset completion: the jump determinant vanishes while the
    /// excess-return determinant does not, so no risk-neutral measure exists.
    #[error("arbitrage: no risk-neutral measure (state {state}: jump determinant 0, excess-return determinant {delta_rc})")]
    Arbitrage { state: usize, delta_rc: f64 },

    /// Two-asset completion: both determinants vanish, so the martingale
    /// conditions admit infinitely many solutions.
    #[error("incomplete: infinitely many risk-neutral measures (state {state}: both determinants 0)")]
    Incomplete { state: usize },
}

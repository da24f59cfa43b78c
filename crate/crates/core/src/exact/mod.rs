//! Exact rational scalars, vectors and matrices.
//!
//! Everything here is exact: elimination is fraction-free on integer-scaled
//! rows, and results are normalized to lowest terms at the end.

mod matrix;
mod rat;

pub use matrix::{QMatrix, QVector, Signature};
pub use rat::{lcm_of_denominators, q, ParseRatError, Rat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExactError {
    #[error("SingularMatrix")]
    SingularMatrix,
    #[error("DimensionMismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("NotSymmetric")]
    NotSymmetric,
    #[error("NotSquare: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Solves `M x = b` for square nonsingular `M`.
pub fn solve_symmetric(m: &QMatrix, b: &QVector) -> Result<QVector, ExactError> {
    m.solve(b)
}

pub fn is_negative_definite(m: &QMatrix) -> Result<bool, ExactError> {
    m.is_negative_definite()
}

pub fn signature(m: &QMatrix) -> Result<Signature, ExactError> {
    m.signature()
}

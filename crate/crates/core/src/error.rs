use thiserror::Error;

use crate::observable::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot normalize the zero vector")]
    ZeroVector,

    #[error("norm {0} deviates from 1 by more than the tolerance")]
    NormViolation(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("non-finite value in input")]
    NonFinite,

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("not a phase matrix: {0}")]
    InvalidPhaseMatrix(ValidationReport),

    #[error("column {column} of the Kraus family has squared norm {norm_sqr}")]
    ColumnNorm { column: usize, norm_sqr: f64 },

    #[error("{0}")]
    OutOfRange(String),

    #[error("state has nonzero coefficients above index {0}")]
    NotBandLimited(usize),

    #[error("numerical corruption: {0}")]
    Numerical(String),

    #[error("Hermitian eigensolver did not converge")]
    Eigensolver,
}

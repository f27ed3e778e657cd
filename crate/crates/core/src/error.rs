use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spin quantum number must be a positive integer, got {0}")]
    InvalidSpin(String),

    #[error("operator mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("{0}")]
    Domain(String),

    #[error("winding vector undefined at boundary (phi = {phi}, sin(eps) = {sin_eps:e})")]
    UndefinedAtBoundary { phi: f64, sin_eps: f64 },

    #[error("winding did not resolve to an integer (value {value}, residual {residual})")]
    NonIntegerWinding { value: f64, residual: f64 },

    #[error("output failed: {0}")]
    Io(String),

    #[error("chiral symmetry relation requested for the original timeframe")]
    NotChiralFrame,
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Bessel order {0} is out of range (need nu > -1)")]
    OrderOutOfRange(f64),

    #[error("argument {re}{im:+}i lies outside the closed right half-plane minus the origin")]
    ArgumentOutOfSector { re: f64, im: f64 },

    #[error("overflow: Re z = {0} exceeds {1}; use the scaled entry point")]
    Overflow(f64, f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("weight exponent m = {0} is not integrable at 0 and the first nodal value is nonzero")]
    DivergentWeight(f64),

    #[error("numerically singular system at row {row} (condition estimate {condition:.3e})")]
    Singular { row: usize, condition: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

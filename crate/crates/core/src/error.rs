use thiserror::Error;

use crate::poly_model::ViolationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("empty expression")]
    EmptyExpression,

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("malformed term: {0}")]
    MalformedTerm(String),

    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(ViolationReport),

    #[error("cap exceeded: d^m = {size} exceeds cap {cap}")]
    CapExceeded { size: String, cap: usize },

    #[error("polynomial is not homogeneous of degree {degree}")]
    NotHomogeneous { degree: usize },

    #[error("target degree {target} is below the polynomial degree {degree}")]
    DegreeTooLow { target: usize, degree: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("need at least {min} shots, got {shots}")]
    TooFewShots { shots: u64, min: u64 },

    #[error("{copies} copies exceeds the permutation limit of {max}")]
    TooManyCopies { copies: usize, max: usize },

    #[error("copies must be at least 1")]
    ZeroCopies,

    #[error("invalid probability distribution: {0}")]
    Distribution(String),

    #[error("invalid state recipe: {0}")]
    InvalidRecipe(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),
}

//! Polynomial functions of a density matrix, measured as observables on
//! several copies of the state.
//!
//! A degree-`m` polynomial in the entries of a `d x d` density matrix is
//! compiled into an operator on `d^m` dimensions whose expectation on
//! `rho^{(x)m}` equals the polynomial. The crate then simulates three ways of
//! measuring it: rotating the observable's eigenbasis onto the computational
//! basis, the control-qubit (Hadamard) test, and the cyclic-shift / Bell-basis
//! purity circuits. Every estimate can be checked against a direct evaluation
//! of the polynomial on the matrix entries.
//!
//! Composite indices are big-endian: the first copy is the most significant
//! base-`d` digit.

pub mod cli;
pub mod error;
pub mod exec;
pub mod hadamard;
pub mod io;
pub mod observable;
pub mod poly_model;
pub mod sampler;
pub mod shift_bell;
pub mod spectral;
pub mod state_gen;
pub mod tensor_ops;

pub use error::{Error, Result};
pub use exec::Execution;
pub use poly_model::{evaluate_exact, homogenize, homogenize_to, parse_polynomial, validate_state};
pub use poly_model::{DensityMatrix, MultiIndexTerm, PolynomialSpec};
pub use sampler::{estimate_polynomial, EstimateOptions, EstimateReport, Method};
pub use tensor_ops::{tensor_power, TensorState, DEFAULT_CAP};

/// Complex scalar used for every coefficient and matrix entry.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;

#[inline]
pub(crate) fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

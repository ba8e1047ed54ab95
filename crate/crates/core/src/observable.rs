//! Operators on `d^m` dimensions whose expectation on `rho^{(x)m}` is a
//! polynomial in the entries of `rho`.
//!
//! The term `rho[i1,j1] ... rho[im,jm]` corresponds to
//! `|j1><i1| (x) ... (x) |jm><im|`. Summing those with the polynomial's
//! coefficients gives `A_f`, which is split into the Hermitian pair
//! `O_f = (A_f + A_f^dagger)/2`, `O'_f = -i (A_f - A_f^dagger)/2`.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::poly_model::PolynomialSpec;
use crate::tensor_ops::TensorState;
use crate::tensor_ops::{checked_power, composite_index, conjugate_by_permutation, permutation_image, trace_product};
use crate::{c64, CMatrix, C64};

/// Largest copy count accepted by [`symmetrize`].
pub const MAX_SYMMETRIZE_COPIES: usize = 6;

/// `A_f` and its Hermitian split.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservablePair {
    pub a_f: CMatrix,
    pub o_real: CMatrix,
    pub o_imag: CMatrix,
}

impl ObservablePair {
    pub fn dim_total(&self) -> usize {
        self.a_f.nrows()
    }
}

/// `|j1><i1| (x) ... (x) |jm><im|` for `indices = [i1, j1, ..., im, jm]`.
pub fn term_operator(indices: &[usize], d: usize, cap: usize) -> Result<CMatrix> {
    let (row, col, n) = term_position(indices, d, cap)?;
    let mut a = CMatrix::zeros(n, n);
    a[(row, col)] = c64(1.0, 0.0);
    Ok(a)
}

/// Row, column and total dimension of the single nonzero entry of a term
/// operator.
fn term_position(indices: &[usize], d: usize, cap: usize) -> Result<(usize, usize, usize)> {
    if indices.is_empty() || !indices.len().is_multiple_of(2) {
        return Err(Error::MalformedTerm(format!("index list of length {}", indices.len())));
    }
    if let Some(&index) = indices.iter().find(|&&i| i >= d) {
        return Err(Error::IndexOutOfRange { index, dim: d });
    }
    let n = checked_power(d, indices.len() / 2, cap)?;
    let is: Vec<usize> = indices.iter().step_by(2).copied().collect();
    let js: Vec<usize> = indices.iter().skip(1).step_by(2).copied().collect();
    Ok((composite_index(&js, d), composite_index(&is, d), n))
}

/// `A_f = sum_terms c * term_operator`, written directly one entry per term.
pub fn assemble_a(spec: &PolynomialSpec, cap: usize) -> Result<CMatrix> {
    if !spec.is_homogeneous() {
        return Err(Error::NotHomogeneous { degree: spec.degree() });
    }
    let d = spec.dim();
    let n = checked_power(d, spec.degree(), cap)?;
    let mut a = CMatrix::zeros(n, n);
    for t in spec.terms() {
        let (row, col, _) = term_position(&t.indices, d, cap)?;
        a[(row, col)] += t.coeff;
    }
    Ok(a)
}

/// Splits `a_f` into `O_f + i O'_f` with both parts Hermitian.
pub fn hermitian_pair(a_f: &CMatrix) -> Result<ObservablePair> {
    if !a_f.is_square() {
        return Err(Error::NonSquare { rows: a_f.nrows(), cols: a_f.ncols() });
    }
    let adj = a_f.adjoint();
    let o_real = (a_f + &adj).scale(0.5);
    let o_imag = (a_f - &adj) * c64(0.0, -0.5);
    Ok(ObservablePair { a_f: a_f.clone(), o_real, o_imag })
}

/// Uniform average of `P a_f P^dagger` over all `m!` permutations of the
/// copy slots.
pub fn symmetrize(a_f: &CMatrix, d: usize, m: usize) -> Result<CMatrix> {
    if m == 0 {
        return Err(Error::ZeroCopies);
    }
    if m > MAX_SYMMETRIZE_COPIES {
        return Err(Error::TooManyCopies { copies: m, max: MAX_SYMMETRIZE_COPIES });
    }
    let n = checked_power(d, m, usize::MAX)?;
    if !a_f.is_square() || a_f.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a_f.nrows() });
    }
    let mut acc = CMatrix::zeros(n, n);
    let mut count = 0usize;
    for perm in (0..m).permutations(m) {
        acc += conjugate_by_permutation(a_f, &permutation_image(d, &perm));
        count += 1;
    }
    Ok(acc.unscale(count as f64))
}

/// `Tr{op rho^{(x)m}}`.
pub fn expectation(op: &CMatrix, state: &TensorState) -> Result<C64> {
    let n = state.dim_total();
    if !op.is_square() || op.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: op.nrows() });
    }
    Ok(trace_product(op, state.matrix()))
}

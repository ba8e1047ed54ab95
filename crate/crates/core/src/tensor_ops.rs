//! Dense complex matrix helpers: Kronecker products, tensor powers, traces,
//! copy permutations and Hermitian square roots.

use crate::error::{Error, Result};
use crate::poly_model::DensityMatrix;
use crate::{c64, CMatrix, C64};

/// Default upper bound on `d^m`.
pub const DEFAULT_CAP: usize = 4096;

const HERMITIAN_TOL: f64 = 1e-10;
const PSD_FLOOR: f64 = -1e-10;

/// `rho^{(x)m}` together with the shape it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorState {
    dim_single: usize,
    copies: usize,
    entries: CMatrix,
}

impl TensorState {
    /// Wraps an arbitrary joint density matrix on `dim_single^copies`
    /// dimensions (for instance an eigenstate of an observable). The matrix
    /// must be Hermitian with unit trace.
    pub fn from_joint(dim_single: usize, copies: usize, entries: CMatrix) -> Result<Self> {
        let n = checked_power(dim_single, copies, usize::MAX)?;
        if !entries.is_square() {
            return Err(Error::NonSquare { rows: entries.nrows(), cols: entries.ncols() });
        }
        if entries.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, found: entries.nrows() });
        }
        let dev = hermiticity_deviation(&entries);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = trace(&entries);
        if (tr - c64(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::Consistency(format!("joint state trace {tr} is not 1")));
        }
        Ok(Self { dim_single, copies, entries })
    }

    pub fn dim_single(&self) -> usize {
        self.dim_single
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    /// Total dimension `d^m`.
    pub fn dim_total(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }
}

/// `base^exp`, failing when it overflows or exceeds `cap`.
pub fn checked_power(base: usize, exp: usize, cap: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = match acc.checked_mul(base) {
            Some(v) if v <= cap => v,
            _ => {
                return Err(Error::CapExceeded { size: format!("{base}^{exp}"), cap });
            }
        };
    }
    if acc > cap {
        return Err(Error::CapExceeded { size: format!("{base}^{exp}"), cap });
    }
    Ok(acc)
}

/// Kronecker product; row `i1 * rows(b) + i2`, column likewise.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// The `m`-fold Kronecker power of `state`.
pub fn tensor_power(state: &DensityMatrix, m: usize, cap: usize) -> Result<TensorState> {
    if m == 0 {
        return Err(Error::ZeroCopies);
    }
    let d = state.dim();
    checked_power(d, m, cap)?;
    let rho = state.matrix();
    let mut acc = rho.clone();
    for _ in 1..m {
        acc = kron(&acc, rho);
    }
    Ok(TensorState { dim_single: d, copies: m, entries: acc })
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// `Tr{a b}` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            acc += a[(r, c)] * b[(c, r)];
        }
    }
    acc
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest entrywise modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            dev = dev.max((a[(r, c)] - a[(c, r)].conj()).norm());
        }
    }
    dev
}

/// `max |a a^dagger - I|`.
pub fn unitarity_deviation(a: &CMatrix) -> f64 {
    max_abs_diff(&(a * a.adjoint()), &identity(a.nrows()))
}

/// `(a + a^dagger) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Big-endian base-`d` digits of a composite index.
pub fn digits(mut index: usize, d: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for slot in (0..m).rev() {
        out[slot] = index % d;
        index /= d;
    }
    out
}

/// Composite index of big-endian base-`d` digits.
pub fn composite_index(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &k| acc * d + k)
}

/// Basis map of the copy permutation `P |k_0 ... k_{m-1}> = |k_{perm[0]} ... k_{perm[m-1]}>`:
/// entry `r` is the image of basis state `r`.
pub fn permutation_image(d: usize, perm: &[usize]) -> Vec<usize> {
    let m = perm.len();
    let n = d.pow(m as u32);
    (0..n)
        .map(|r| {
            let k = digits(r, d, m);
            let permuted: Vec<usize> = perm.iter().map(|&src| k[src]).collect();
            composite_index(&permuted, d)
        })
        .collect()
}

/// Permutation matrix for rearranging the `m` copy slots; output slot `s`
/// carries input slot `perm[s]`.
pub fn copy_permutation(d: usize, perm: &[usize], cap: usize) -> Result<CMatrix> {
    let n = checked_power(d, perm.len(), cap)?;
    let image = permutation_image(d, perm);
    let mut p = CMatrix::zeros(n, n);
    for (col, &row) in image.iter().enumerate() {
        p[(row, col)] = c64(1.0, 0.0);
    }
    Ok(p)
}

/// `P a P^dagger` for the permutation matrix with the given basis image,
/// computed by reindexing.
pub fn conjugate_by_permutation(a: &CMatrix, image: &[usize]) -> CMatrix {
    let n = a.nrows();
    let mut out = CMatrix::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            out[(image[r], image[c])] = a[(r, c)];
        }
    }
    out
}

/// Hermitian positive-semidefinite square root.
///
/// Eigenvalues down to `-1e-10` are clamped to zero before the root; anything
/// more negative is rejected.
pub fn sqrt_psd(h: &CMatrix) -> Result<CMatrix> {
    if !h.is_square() {
        return Err(Error::NonSquare { rows: h.nrows(), cols: h.ncols() });
    }
    let dev = hermiticity_deviation(h);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let eig = hermitian_part(h).symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < PSD_FLOOR {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let v = &eig.eigenvectors;
    let roots = eig.eigenvalues.map(|x| c64(x.max(0.0).sqrt(), 0.0));
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= roots[j];
    }
    let out = scaled * v.adjoint();
    Ok(hermitian_part(&out))
}

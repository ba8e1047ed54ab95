//! Eigendecomposition of Hermitian observables and the standard-basis
//! outcome distribution after rotating the eigenbasis onto `|j>`.

use crate::error::{Error, Result};
use crate::tensor_ops::{hermitian_part, hermiticity_deviation, TensorState};
use crate::{CMatrix, C64};

const HERMITIAN_TOL: f64 = 1e-10;
const NEGATIVE_PROB_TOL: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-10;

/// `O = sum_j o_j |phi_j><phi_j|` with eigenvalues in descending order.
///
/// `rotation` is `U = sum_j |j><phi_j|`, i.e. the adjoint of the eigenvector
/// matrix, so `U O U^dagger` is diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
    pub rotation: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `sum_j o_j |phi_j><phi_j|`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::new(self.eigenvalues[j], 0.0);
        }
        scaled * self.eigenvectors.adjoint()
    }
}

/// Decomposes a Hermitian matrix.
///
/// Eigenvalues are sorted descending. Each eigenvector is rephased so its
/// largest-magnitude component is real and positive (first such component on
/// ties).
pub fn eigh(o: &CMatrix) -> Result<SpectralDecomposition> {
    if !o.is_square() {
        return Err(Error::NonSquare { rows: o.nrows(), cols: o.ncols() });
    }
    let dev = hermiticity_deviation(o);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let eig = hermitian_part(o).symmetric_eigen();
    let n = o.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for r in 1..n {
            if col[r].norm() > col[pivot].norm() {
                pivot = r;
            }
        }
        let phase = col[pivot].conj() / col[pivot].norm();
        eigenvectors.set_column(dst, &(col * phase));
    }
    let rotation = eigenvectors.adjoint();
    Ok(SpectralDecomposition { eigenvalues, eigenvectors, rotation })
}

/// Probabilities of standard-basis outcomes with the eigenvalue attached to
/// each outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    probabilities: Vec<f64>,
    values: Vec<f64>,
}

impl OutcomeDistribution {
    /// Accepts probabilities down to `-1e-12` (clamped to zero) and a total
    /// within `1e-10` of one (renormalized); anything worse is an error.
    pub fn new(probabilities: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if probabilities.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: values.len(), found: probabilities.len() });
        }
        if probabilities.is_empty() {
            return Err(Error::Distribution("no outcomes".into()));
        }
        if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < -NEGATIVE_PROB_TOL) {
            return Err(Error::Distribution(format!("probability {p:e} is negative or not finite")));
        }
        let mut probabilities: Vec<f64> = probabilities.into_iter().map(|p| p.max(0.0)).collect();
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Distribution(format!("probabilities sum to {total}")));
        }
        probabilities.iter_mut().for_each(|p| *p /= total);
        Ok(Self { probabilities, values })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `sum_j p_j o_j`.
    pub fn mean(&self) -> f64 {
        self.probabilities.iter().zip(&self.values).map(|(p, o)| p * o).sum()
    }
}

/// `p_j = <j| U rho^{(x)m} U^dagger |j> = <phi_j| rho^{(x)m} |phi_j>`.
pub fn outcome_distribution(decomp: &SpectralDecomposition, state: &TensorState) -> Result<OutcomeDistribution> {
    let n = decomp.dim();
    if state.dim_total() != n {
        return Err(Error::DimensionMismatch { expected: n, found: state.dim_total() });
    }
    let v = &decomp.eigenvectors;
    let rho_v = state.matrix() * v;
    let probabilities =
        (0..n).map(|j| v.column(j).iter().zip(rho_v.column(j).iter()).map(|(a, b)| (a.conj() * b).re).sum()).collect();
    OutcomeDistribution::new(probabilities, decomp.eigenvalues.clone())
}

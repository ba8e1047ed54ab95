//! Polynomials in the entries of a density matrix.
//!
//! A term `c * rho[i1,j1] * ... * rho[ik,jk]` is stored as the flattened
//! index list `[i1, j1, ..., ik, jk]` plus its coefficient. Specs are kept in
//! canonical form: terms sorted lexicographically by index list, duplicates
//! merged, exact zeros dropped.

mod parser;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor_ops::{hermitian_part, hermiticity_deviation, trace};
use crate::{c64, CMatrix, CVector, C64};

pub use parser::parse_polynomial;

/// Hermiticity and trace tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-12;
/// Most negative eigenvalue still accepted as positive semidefinite.
pub const PSD_FLOOR: f64 = -1e-10;

/// One monomial `coeff * prod_k rho[i_k, j_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexTerm {
    pub indices: Vec<usize>,
    pub coeff: C64,
}

impl MultiIndexTerm {
    pub fn new(indices: Vec<usize>, coeff: C64) -> Self {
        Self { indices, coeff }
    }

    /// Number of matrix-entry factors.
    pub fn degree(&self) -> usize {
        self.indices.len() / 2
    }

    /// `(i_k, j_k)` pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.indices.chunks_exact(2).map(|p| (p[0], p[1]))
    }
}

/// A polynomial of degree at most `degree` over the entries of a
/// `dim x dim` matrix. Individual terms may have lower degree until the
/// spec is homogenized.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSpec {
    dim: usize,
    degree: usize,
    terms: Vec<MultiIndexTerm>,
}

impl PolynomialSpec {
    /// Validates and canonicalizes. Every term must have an even-length index
    /// list, indices below `dim`, a finite coefficient and degree at most
    /// `degree`.
    pub fn new(dim: usize, degree: usize, terms: Vec<MultiIndexTerm>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if degree == 0 {
            return Err(Error::MalformedTerm("polynomial degree must be at least 1".into()));
        }
        for t in &terms {
            if t.indices.len() % 2 != 0 {
                return Err(Error::MalformedTerm(format!("index list of odd length {}", t.indices.len())));
            }
            if let Some(&index) = t.indices.iter().find(|&&i| i >= dim) {
                return Err(Error::IndexOutOfRange { index, dim });
            }
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(Error::MalformedTerm(format!("non-finite coefficient {}", t.coeff)));
            }
            if t.degree() > degree {
                return Err(Error::MalformedTerm(format!(
                    "term of degree {} exceeds declared degree {degree}",
                    t.degree()
                )));
            }
        }
        Ok(Self { dim, degree, terms: canonicalize(terms) })
    }

    /// Like [`PolynomialSpec::new`] with the degree taken from the longest
    /// term (at least 1).
    pub fn from_terms(dim: usize, terms: Vec<MultiIndexTerm>) -> Result<Self> {
        let degree = terms.iter().map(MultiIndexTerm::degree).max().unwrap_or(0).max(1);
        Self::new(dim, degree, terms)
    }

    /// `Tr rho^2 = sum_{i,j} rho[i,j] rho[j,i]`.
    pub fn purity(dim: usize) -> Result<Self> {
        let terms = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| MultiIndexTerm::new(vec![i, j, j, i], c64(1.0, 0.0))))
            .collect();
        Self::new(dim, 2, terms)
    }

    /// `Tr rho = sum_i rho[i,i]`.
    pub fn trace(dim: usize) -> Result<Self> {
        let terms = (0..dim).map(|i| MultiIndexTerm::new(vec![i, i], c64(1.0, 0.0))).collect();
        Self::new(dim, 1, terms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[MultiIndexTerm] {
        &self.terms
    }

    pub fn is_homogeneous(&self) -> bool {
        self.terms.iter().all(|t| t.degree() == self.degree)
    }

    /// Sum of two polynomials on the same dimension.
    pub fn add(&self, other: &PolynomialSpec) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let terms = self.terms.iter().chain(other.terms.iter()).cloned().collect();
        Self::new(self.dim, self.degree.max(other.degree), terms)
    }

    /// Multiplies every coefficient by `factor`.
    pub fn scaled(&self, factor: C64) -> Result<Self> {
        let terms = self.terms.iter().map(|t| MultiIndexTerm::new(t.indices.clone(), t.coeff * factor)).collect();
        Self::new(self.dim, self.degree, terms)
    }
}

impl fmt::Display for PolynomialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, t) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", t.coeff.re, t.coeff.im)?;
            for (i, j) in t.pairs() {
                write!(f, "*r[{i},{j}]")?;
            }
        }
        Ok(())
    }
}

fn canonicalize(terms: Vec<MultiIndexTerm>) -> Vec<MultiIndexTerm> {
    let mut merged: BTreeMap<Vec<usize>, C64> = BTreeMap::new();
    for t in terms {
        *merged.entry(t.indices).or_insert(c64(0.0, 0.0)) += t.coeff;
    }
    merged
        .into_iter()
        .filter(|(_, c)| *c != c64(0.0, 0.0))
        .map(|(indices, coeff)| MultiIndexTerm { indices, coeff })
        .collect()
}

/// Lifts every term to the spec's own degree by inserting factors of
/// `Tr rho = 1`.
pub fn homogenize(spec: &PolynomialSpec) -> PolynomialSpec {
    homogenize_to(spec, spec.degree).expect("own degree is never below the spec degree")
}

/// Lifts every term to `degree`: a degree-`k` term is replaced by the sum
/// over `a_1 .. a_{degree-k}` of the same term with the diagonal pairs
/// `(a_1, a_1) .. (a_{degree-k}, a_{degree-k})` appended.
pub fn homogenize_to(spec: &PolynomialSpec, degree: usize) -> Result<PolynomialSpec> {
    if degree < spec.degree {
        return Err(Error::DegreeTooLow { target: degree, degree: spec.degree });
    }
    let d = spec.dim;
    let mut lifted = Vec::new();
    for t in &spec.terms {
        let missing = degree - t.degree();
        let combos = d
            .checked_pow(missing as u32)
            .ok_or_else(|| Error::CapExceeded { size: format!("{d}^{missing}"), cap: usize::MAX })?;
        for combo in 0..combos {
            let mut indices = t.indices.clone();
            indices.extend(crate::tensor_ops::digits(combo, d, missing).into_iter().flat_map(|a| [a, a]));
            lifted.push(MultiIndexTerm::new(indices, t.coeff));
        }
    }
    PolynomialSpec::new(d, degree, lifted)
}

/// Direct evaluation `sum coeff * prod_k rho[i_k, j_k]`.
pub fn evaluate_exact(spec: &PolynomialSpec, state: &DensityMatrix) -> Result<C64> {
    if spec.dim != state.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim, found: state.dim() });
    }
    let rho = state.matrix();
    Ok(spec.terms.iter().map(|t| t.pairs().fold(t.coeff, |acc, (i, j)| acc * rho[(i, j)])).sum())
}

/// A Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    /// `I / d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self { entries: CMatrix::identity(d, d).scale(1.0 / d as f64) }
    }

    /// `|k><k|`.
    pub fn computational(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::IndexOutOfRange { index: k, dim: d });
        }
        let mut entries = CMatrix::zeros(d, d);
        entries[(k, k)] = c64(1.0, 0.0);
        Ok(Self { entries })
    }

    /// Projector onto the normalized `psi`.
    pub fn from_pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Consistency("state vector has zero or non-finite norm".into()));
        }
        let v = psi.unscale(norm);
        validate_state(&v * v.adjoint())
    }
}

/// One failed density-matrix invariant with its measured deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "invariant", rename_all = "kebab-case")]
pub enum Violation {
    Hermitian { max_deviation: f64 },
    Trace { trace_re: f64, trace_im: f64, deviation: f64 },
    Psd { min_eigenvalue: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Hermitian { max_deviation } => {
                write!(f, "Hermitian: max |rho - rho^dagger| = {max_deviation:e}")
            }
            Violation::Trace { trace_re, trace_im, deviation } => {
                write!(f, "trace: Tr rho = {trace_re}{trace_im:+}i, off by {deviation:e}")
            }
            Violation::Psd { min_eigenvalue } => {
                write!(f, "positive semidefinite: min eigenvalue {min_eigenvalue:e}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks Hermiticity (1e-12), unit trace (1e-12) and positivity (smallest
/// eigenvalue of the Hermitian part at least -1e-10), reporting every
/// violated invariant.
pub fn validate_state(entries: CMatrix) -> Result<DensityMatrix> {
    if !entries.is_square() {
        return Err(Error::NonSquare { rows: entries.nrows(), cols: entries.ncols() });
    }
    if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Consistency("matrix has non-finite entries".into()));
    }
    let mut violations = Vec::new();

    let herm = hermiticity_deviation(&entries);
    if herm > STATE_TOL {
        violations.push(Violation::Hermitian { max_deviation: herm });
    }

    let tr = trace(&entries);
    let tr_dev = (tr - c64(1.0, 0.0)).norm();
    if tr_dev > STATE_TOL {
        violations.push(Violation::Trace { trace_re: tr.re, trace_im: tr.im, deviation: tr_dev });
    }

    let min = hermitian_part(&entries).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min < PSD_FLOOR {
        violations.push(Violation::Psd { min_eigenvalue: min });
    }

    if violations.is_empty() {
        Ok(DensityMatrix { entries })
    } else {
        Err(Error::InvalidState(ViolationReport { violations }))
    }
}

//! Deterministic state generators: named states, seeded random ensembles,
//! and seeded random polynomials / observables used as test fixtures.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly_model::{validate_state, DensityMatrix, MultiIndexTerm, PolynomialSpec};
use crate::tensor_ops::hermitian_part;
use crate::{c64, CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    /// Haar-random pure state.
    PureRandom,
    /// `G G^dagger / Tr{G G^dagger}` with `G` a `dim x rank` complex Gaussian matrix.
    Ginibre,
    MaximallyMixed,
    /// `|index><index|`.
    Computational,
    /// Two-qubit singlet `(|01> - |10>)/sqrt(2)`; requires `dim = 4`.
    BellSinglet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateRecipe {
    pub kind: StateKind,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl StateRecipe {
    pub fn new(kind: StateKind, dim: usize, seed: u64) -> Self {
        Self { kind, dim, rank: None, index: None, seed }
    }
}

pub fn generate(recipe: &StateRecipe) -> Result<DensityMatrix> {
    let dim = recipe.dim;
    if dim < 2 {
        return Err(Error::InvalidRecipe(format!("dimension {dim} is below 2")));
    }
    if let Some(rank) = recipe.rank {
        if rank == 0 || rank > dim {
            return Err(Error::InvalidRecipe(format!("rank {rank} not in 1..={dim}")));
        }
        if recipe.kind != StateKind::Ginibre {
            return Err(Error::InvalidRecipe("rank only applies to ginibre".into()));
        }
    }
    if recipe.index.is_some() && recipe.kind != StateKind::Computational {
        return Err(Error::InvalidRecipe("index only applies to computational".into()));
    }
    match recipe.kind {
        StateKind::PureRandom => {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(recipe.seed);
            let psi = CVector::from_iterator(dim, (0..dim).map(|_| gaussian(&mut rng)));
            DensityMatrix::from_pure(&psi)
        }
        StateKind::Ginibre => Ok(random_density(dim, recipe.rank.unwrap_or(dim), recipe.seed)),
        StateKind::MaximallyMixed => Ok(DensityMatrix::maximally_mixed(dim)),
        StateKind::Computational => {
            let k = recipe.index.unwrap_or(0);
            DensityMatrix::computational(dim, k)
                .map_err(|_| Error::InvalidRecipe(format!("index {k} out of range for dimension {dim}")))
        }
        StateKind::BellSinglet => {
            if dim != 4 {
                return Err(Error::InvalidRecipe("bell-singlet requires dim 4".into()));
            }
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let psi = CVector::from_vec(vec![c64(0.0, 0.0), c64(s, 0.0), c64(-s, 0.0), c64(0.0, 0.0)]);
            DensityMatrix::from_pure(&psi)
        }
    }
}

fn gaussian(rng: &mut Xoshiro256PlusPlus) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im)
}

/// `rows x cols` matrix of independent standard complex Gaussians.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    CMatrix::from_fn(rows, cols, |_, _| gaussian(&mut rng))
}

/// Ginibre-ensemble state of the given rank.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> DensityMatrix {
    let g = random_matrix(dim, rank, seed);
    let w = &g * g.adjoint();
    let tr: f64 = w.diagonal().iter().map(|z| z.re).sum();
    let rho = hermitian_part(&w.unscale(tr));
    validate_state(rho).expect("Ginibre construction yields a valid state")
}

/// Seeded random Hermitian matrix (GUE-like, unit-scale entries).
pub fn random_hermitian(n: usize, seed: u64) -> CMatrix {
    hermitian_part(&random_matrix(n, n, seed))
}

/// Seeded Hermitian matrix with a deliberately degenerate spectrum: the
/// eigenvalues are drawn from `levels` distinct values and rotated by a
/// random unitary.
pub fn random_degenerate_hermitian(n: usize, levels: usize, seed: u64) -> CMatrix {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let values: Vec<f64> = (0..levels.max(1)).map(|_| rng.random_range(-2.0..2.0)).collect();
    let diag = CVector::from_iterator(n, (0..n).map(|k| c64(values[k % values.len()], 0.0)));
    let q = random_matrix(n, n, seed ^ 0x5eed).qr().q();
    hermitian_part(&(&q * CMatrix::from_diagonal(&diag) * q.adjoint()))
}

/// Seeded random polynomial with `n_terms` terms and complex coefficients.
/// With `mixed_degree` term degrees are drawn from `1..=degree` (the first
/// term always has the full degree); otherwise every term has degree
/// `degree`.
pub fn random_polynomial(dim: usize, degree: usize, n_terms: usize, mixed_degree: bool, seed: u64) -> PolynomialSpec {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut terms = Vec::with_capacity(n_terms);
    for n in 0..n_terms {
        let k = if mixed_degree && n > 0 { rng.random_range(1..=degree) } else { degree };
        let indices = (0..2 * k).map(|_| rng.random_range(0..dim)).collect();
        let coeff = c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        terms.push(MultiIndexTerm::new(indices, coeff));
    }
    PolynomialSpec::new(dim, degree, terms).expect("generated terms are in range")
}

/// Random polynomial whose operator is Hermitian: every term is paired with
/// its conjugate counterpart (indices `i_k <-> j_k` swapped, coefficient
/// conjugated), so the polynomial is real on every density matrix.
pub fn random_hermitian_polynomial(dim: usize, degree: usize, n_terms: usize, seed: u64) -> PolynomialSpec {
    let base = random_polynomial(dim, degree, n_terms, false, seed);
    let mut terms = Vec::with_capacity(2 * base.terms().len());
    for t in base.terms() {
        let swapped = t.pairs().flat_map(|(i, j)| [j, i]).collect();
        terms.push(t.clone());
        terms.push(MultiIndexTerm::new(swapped, t.coeff.conj()));
    }
    PolynomialSpec::new(dim, degree, terms).expect("generated terms are in range")
}

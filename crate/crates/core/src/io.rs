//! JSON file formats. Complex numbers are `[re, im]` pairs; matrices are
//! row-major arrays of rows.
//!
//! Polynomial: `{ "dim": d, "terms": [ { "indices": [i1, j1, ...], "coeff": [re, im] }, ... ] }`
//!
//! State: `{ "dim": d, "entries": [[[re, im], ...], ...] }`, optionally with
//! the generating `"recipe"`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly_model::{validate_state, DensityMatrix, MultiIndexTerm, PolynomialSpec};
use crate::state_gen::StateRecipe;
use crate::{c64, CMatrix, C64};

pub type ComplexPair = [f64; 2];

pub fn pair(z: C64) -> ComplexPair {
    [z.re, z.im]
}

pub fn matrix_rows(a: &CMatrix) -> Vec<Vec<ComplexPair>> {
    a.row_iter().map(|row| row.iter().map(|z| pair(*z)).collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<ComplexPair>]) -> Result<CMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(Error::NonSquare { rows: n, cols: bad.len() });
    }
    Ok(CMatrix::from_fn(n, cols, |r, c| c64(rows[r][c][0], rows[r][c][1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub indices: Vec<usize>,
    pub coeff: ComplexPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFile {
    pub dim: usize,
    pub terms: Vec<TermRecord>,
}

impl PolyFile {
    pub fn from_spec(spec: &PolynomialSpec) -> Self {
        Self {
            dim: spec.dim(),
            terms: spec
                .terms()
                .iter()
                .map(|t| TermRecord { indices: t.indices.clone(), coeff: pair(t.coeff) })
                .collect(),
        }
    }

    /// Degree is the longest term.
    pub fn to_spec(&self) -> Result<PolynomialSpec> {
        let terms =
            self.terms.iter().map(|t| MultiIndexTerm::new(t.indices.clone(), c64(t.coeff[0], t.coeff[1]))).collect();
        PolynomialSpec::from_terms(self.dim, terms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub entries: Vec<Vec<ComplexPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<StateRecipe>,
}

impl StateFile {
    pub fn from_state(state: &DensityMatrix, recipe: Option<StateRecipe>) -> Self {
        Self { dim: state.dim(), entries: matrix_rows(state.matrix()), recipe }
    }

    /// Parses and validates the density matrix.
    pub fn to_state(&self) -> Result<DensityMatrix> {
        let m = matrix_from_rows(&self.entries)?;
        if !m.is_square() {
            return Err(Error::NonSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.nrows() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: m.nrows() });
        }
        validate_state(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_gen::{random_density, random_polynomial};
    use proptest::prelude::*;

    #[test]
    fn poly_file_shape() {
        let json = r#"{ "dim": 2, "terms": [ { "indices": [0,1,1,0], "coeff": [1.0, 0.0] },
                                             { "indices": [0,0], "coeff": [0.5, -0.5] } ] }"#;
        let file: PolyFile = serde_json::from_str(json).unwrap();
        let spec = file.to_spec().unwrap();
        assert_eq!(spec.degree(), 2);
        assert_eq!(spec.terms()[0], MultiIndexTerm::new(vec![0, 0], c64(0.5, -0.5)));
    }

    #[test]
    fn state_file_validation() {
        let json = r#"{ "dim": 2, "entries": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]] }"#;
        let file: StateFile = serde_json::from_str(json).unwrap();
        assert_eq!(file.to_state().unwrap(), DensityMatrix::maximally_mixed(2));

        let bad = r#"{ "dim": 2, "entries": [[[1,0],[0,0]],[[0,0],[0.1,0]]] }"#;
        let file: StateFile = serde_json::from_str(bad).unwrap();
        assert!(matches!(file.to_state(), Err(Error::InvalidState(_))));

        let ragged = r#"{ "dim": 2, "entries": [[[1,0],[0,0]],[[0,0]]] }"#;
        let file: StateFile = serde_json::from_str(ragged).unwrap();
        assert!(file.to_state().is_err());

        let wrong_dim = r#"{ "dim": 3, "entries": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]] }"#;
        let file: StateFile = serde_json::from_str(wrong_dim).unwrap();
        assert!(matches!(file.to_state(), Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn json_roundtrip(seed in 0u64..1000) {
            let spec = random_polynomial(3, 2, 5, true, seed);
            let text = serde_json::to_string(&PolyFile::from_spec(&spec)).unwrap();
            let back: PolyFile = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.to_spec().unwrap(), spec);

            let rho = random_density(3, 2, seed);
            let text = serde_json::to_string(&StateFile::from_state(&rho, None)).unwrap();
            let back: StateFile = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.to_state().unwrap(), rho);
        }
    }
}

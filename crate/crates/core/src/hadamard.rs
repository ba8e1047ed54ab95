//! Control-qubit (Hadamard) test.
//!
//! A control qubit in `|0>` goes through `H`, controls `u` on the `m`
//! systems, goes through `H` again and is measured in `Z`. Its expectation is
//! `(1/2) Tr{(u + u^dagger) rho^{(x)m}}`. An observable `O` is turned into
//! such a `u` by scaling it into `[-1, 1]` and embedding
//! `u = O/c + i sqrt(I - (O/c)^2)`.
//!
//! The control qubit is tensor slot 0 (most significant), so
//! `controlled-u = diag(I, u)` and `Z (x) I = diag(I, -I)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::sampler::{estimate_distribution, ShotEstimate};
use crate::shift_bell::GateSet;
use crate::spectral::{eigh, OutcomeDistribution};
use crate::tensor_ops::{
    hermitian_part, hermiticity_deviation, identity, kron, max_abs_diff, sqrt_psd, trace, trace_product,
    unitarity_deviation, TensorState,
};
use crate::{c64, CMatrix, C64};

const HERMITIAN_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;
/// Relative margin on the largest eigenvalue when choosing `c`.
pub const SCALE_MARGIN: f64 = 1e-9;
/// Eigenvalues of `(u + u^dagger)/2` closer than this are treated as one
/// degenerate cluster when diagonalizing `u`.
const CLUSTER_TOL: f64 = 1e-8;

/// Unitary `u` with `(u + u^dagger)/2 = source / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedUnitary {
    pub u: CMatrix,
    pub scale: f64,
    pub source: CMatrix,
}

impl EmbeddedUnitary {
    /// Uses a given unitary directly (scale 1, source its Hermitian part).
    pub fn from_unitary(u: CMatrix) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::NonSquare { rows: u.nrows(), cols: u.ncols() });
        }
        let deviation = unitarity_deviation(&u);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        let source = hermitian_part(&u);
        Ok(Self { u, scale: 1.0, source })
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// `max |u u^dagger - I|`.
    pub fn unitarity_residual(&self) -> f64 {
        unitarity_deviation(&self.u)
    }

    /// `max |(u + u^dagger)/2 - source/scale|`.
    pub fn real_part_residual(&self) -> f64 {
        max_abs_diff(&hermitian_part(&self.u), &self.source.unscale(self.scale))
    }
}

/// `max(1, (1 + 1e-9) max_j |o_j|)`.
pub fn scale_factor(o: &CMatrix) -> Result<f64> {
    check_hermitian(o)?;
    let largest = hermitian_part(o).symmetric_eigenvalues().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(((1.0 + SCALE_MARGIN) * largest).max(1.0))
}

/// `u = O/c + i sqrt(I - (O/c)^2)`.
pub fn embed_unitary(o: &CMatrix) -> Result<EmbeddedUnitary> {
    let scale = scale_factor(o)?;
    let scaled = hermitian_part(o).unscale(scale);
    let n = o.nrows();
    let rest = hermitian_part(&(identity(n) - &scaled * &scaled));
    let root = sqrt_psd(&rest)?;
    let u = &scaled + root * c64(0.0, 1.0);
    Ok(EmbeddedUnitary { u, scale, source: o.clone() })
}

fn check_hermitian(o: &CMatrix) -> Result<()> {
    if !o.is_square() {
        return Err(Error::NonSquare { rows: o.nrows(), cols: o.ncols() });
    }
    let deviation = hermiticity_deviation(o);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

fn check_dims(emb: &EmbeddedUnitary, state: &TensorState) -> Result<()> {
    if emb.dim() != state.dim_total() {
        return Err(Error::DimensionMismatch { expected: emb.dim(), found: state.dim_total() });
    }
    Ok(())
}

/// Eigenphases `theta_j` and eigenvectors of a unitary.
///
/// `u` is normal, so its Hermitian parts `(u + u^dagger)/2` and
/// `(u - u^dagger)/(2i)` commute; the first is diagonalized and the second
/// is then diagonalized inside each degenerate cluster of the first.
pub fn unitary_eigen(u: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let deviation = unitarity_deviation(u);
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let cos_part = hermitian_part(u);
    let sin_part = hermitian_part(&((u - u.adjoint()) * c64(0.0, -0.5)));
    let base = eigh(&cos_part)?;
    let n = u.nrows();
    let mut vectors = base.eigenvectors.clone();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (base.eigenvalues[end - 1] - base.eigenvalues[end]).abs() <= CLUSTER_TOL {
            end += 1;
        }
        let k = end - start;
        if k > 1 {
            let block = base.eigenvectors.columns(start, k).into_owned();
            let restricted = block.adjoint() * &sin_part * &block;
            let inner = eigh(&hermitian_part(&restricted))?;
            vectors.columns_mut(start, k).copy_from(&(block * inner.eigenvectors));
        }
        start = end;
    }
    let uv = u * &vectors;
    let phases = (0..n)
        .map(|j| {
            let z: C64 = vectors.column(j).iter().zip(uv.column(j).iter()).map(|(a, b)| a.conj() * b).sum();
            z.arg()
        })
        .collect();
    Ok((phases, vectors))
}

/// `rho^{(x)m}` written in the eigenbasis of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct UEigenExpansion {
    /// `R_{jj'} = <phi_j| rho^{(x)m} |phi_j'>`.
    pub r: CMatrix,
    pub phases: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn u_eigen_expansion(emb: &EmbeddedUnitary, state: &TensorState) -> Result<UEigenExpansion> {
    check_dims(emb, state)?;
    let (phases, vectors) = unitary_eigen(&emb.u)?;
    let r = vectors.adjoint() * state.matrix() * &vectors;
    Ok(UEigenExpansion { r, phases, vectors })
}

/// `(1/2) Tr{(u + u^dagger) rho^{(x)m}}`.
pub fn formula_expectation(emb: &EmbeddedUnitary, state: &TensorState) -> Result<f64> {
    check_dims(emb, state)?;
    Ok(trace_product(&hermitian_part(&emb.u), state.matrix()).re)
}

fn controlled(u: &CMatrix) -> CMatrix {
    let n = u.nrows();
    let mut cu = identity(2 * n);
    cu.view_mut((n, n), (n, n)).copy_from(u);
    cu
}

fn z_on_control(n: usize) -> CMatrix {
    kron(&GateSet::standard().pauli_z, &identity(n))
}

fn control_zero_joint(state: &TensorState) -> CMatrix {
    let mut zero = CMatrix::zeros(2, 2);
    zero[(0, 0)] = c64(1.0, 0.0);
    kron(&zero, state.matrix())
}

/// Simulates the circuit with explicit `2 d^m`-dimensional matrices and
/// returns the control qubit's `<Z>`.
pub fn run_circuit_exact(emb: &EmbeddedUnitary, state: &TensorState) -> Result<f64> {
    check_dims(emb, state)?;
    let n = emb.dim();
    let h = kron(&GateSet::standard().hadamard, &identity(n));
    let circuit = &h * controlled(&emb.u) * &h;
    let out = &circuit * control_zero_joint(state) * circuit.adjoint();
    Ok(trace_product(&z_on_control(n), &out).re)
}

/// Reduced state of the control qubit after the circuit, from the block
/// structure of the final state:
/// `(1/4) [[rho + rho u^dag + u rho + u rho u^dag, ...], ...]`.
pub fn control_state(emb: &EmbeddedUnitary, state: &TensorState) -> Result<CMatrix> {
    check_dims(emb, state)?;
    let rho = state.matrix();
    let t = trace(rho);
    let tu = trace_product(&emb.u, rho);
    let tud = trace_product(rho, &emb.u.adjoint());
    // Tr{u rho u^dag} = Tr{rho} for unitary u
    let tuu = t;
    let q = c64(0.25, 0.0);
    Ok(CMatrix::from_row_slice(
        2,
        2,
        &[(t + tud + tu + tuu) * q, (t - tud + tu - tuu) * q, (t + tud - tu - tuu) * q, (t - tud - tu + tuu) * q],
    ))
}

/// Shot statistics of the control qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlEstimate {
    /// Mean of the `+1 / -1` outcomes, an estimate of `<O/c>`.
    pub raw: ShotEstimate,
    pub scale: f64,
}

impl ControlEstimate {
    /// Estimate of `<O>` (raw statistics times `c`).
    pub fn rescaled(&self) -> ShotEstimate {
        self.raw.scaled(self.scale)
    }
}

pub fn sample_control(emb: &EmbeddedUnitary, state: &TensorState, shots: u64, seed: u64) -> Result<ControlEstimate> {
    sample_control_with(emb, state, shots, seed, Execution::default())
}

/// Samples `Z` outcomes of the control qubit (`+1` for `|0>`, `-1` for `|1>`).
pub fn sample_control_with(
    emb: &EmbeddedUnitary,
    state: &TensorState,
    shots: u64,
    seed: u64,
    exec: Execution,
) -> Result<ControlEstimate> {
    if shots < 2 {
        return Err(Error::TooFewShots { shots, min: 2 });
    }
    let reduced = control_state(emb, state)?;
    let p0 = reduced[(0, 0)].re.clamp(0.0, 1.0);
    let dist = OutcomeDistribution::new(vec![p0, 1.0 - p0], vec![1.0, -1.0])?;
    let raw = estimate_distribution(&dist, shots, seed, exec)?;
    Ok(ControlEstimate { raw, scale: emb.scale })
}

/// `E = sum_j e^{i theta_j / 2} exp(-i theta_j X / 2) (x) |phi_j><phi_j|`.
pub fn e_operator(phases: &[f64], vectors: &CMatrix) -> CMatrix {
    let n = vectors.nrows();
    let x = GateSet::standard().pauli_x;
    let mut e = CMatrix::zeros(2 * n, 2 * n);
    for (j, &theta) in phases.iter().enumerate() {
        let rotation = (identity(2) * c64((theta / 2.0).cos(), 0.0) - &x * c64(0.0, (theta / 2.0).sin()))
            * C64::from_polar(1.0, theta / 2.0);
        let phi = vectors.column(j);
        let projector = phi * phi.adjoint();
        e += kron(&rotation, &projector);
    }
    e
}

/// Deviations between the three routes to the control expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EOperatorCheck {
    pub e_value: f64,
    pub circuit_value: f64,
    pub formula_value: f64,
    /// `|E route - circuit|`.
    pub vs_circuit: f64,
    /// `|E route - (1/2) Tr{(u + u^dagger) rho}|`.
    pub vs_formula: f64,
    /// `max |E - H C(u) H|`.
    pub operator_deviation: f64,
}

impl EOperatorCheck {
    pub fn max_deviation(&self) -> f64 {
        self.vs_circuit.max(self.vs_formula).max(self.operator_deviation)
    }
}

/// Builds `E` from the eigendecomposition of `u` and compares
/// `Tr{(Z (x) I) E (|0><0| (x) rho) E^dagger}` with the circuit and the
/// closed form.
pub fn e_operator_check(emb: &EmbeddedUnitary, state: &TensorState) -> Result<EOperatorCheck> {
    let expansion = u_eigen_expansion(emb, state)?;
    let n = emb.dim();
    let e = e_operator(&expansion.phases, &expansion.vectors);
    let out = &e * control_zero_joint(state) * e.adjoint();
    let e_value = trace_product(&z_on_control(n), &out).re;
    let circuit_value = run_circuit_exact(emb, state)?;
    let formula_value = formula_expectation(emb, state)?;

    let h = kron(&GateSet::standard().hadamard, &identity(n));
    let circuit = &h * controlled(&emb.u) * &h;
    Ok(EOperatorCheck {
        e_value,
        circuit_value,
        formula_value,
        vs_circuit: (e_value - circuit_value).abs(),
        vs_formula: (e_value - formula_value).abs(),
        operator_deviation: max_abs_diff(&e, &circuit),
    })
}

/// Control `<Z>` after running the circuit on `|0>|phi_j>` for each
/// eigenvector of `u`, paired with `cos theta_j`.
pub fn eigenstate_expectations(emb: &EmbeddedUnitary, dim_single: usize, copies: usize) -> Result<Vec<(f64, f64)>> {
    let (phases, vectors) = unitary_eigen(&emb.u)?;
    phases
        .iter()
        .enumerate()
        .map(|(j, &theta)| {
            let phi = vectors.column(j);
            let pure = TensorState::from_joint(dim_single, copies, phi * phi.adjoint())?;
            Ok((run_circuit_exact(emb, &pure)?, theta.cos()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::{assemble_a, hermitian_pair};
    use crate::poly_model::{DensityMatrix, PolynomialSpec};
    use crate::state_gen::{random_density, random_hermitian, random_polynomial};
    use crate::tensor_ops::{max_abs, tensor_power, DEFAULT_CAP};
    use crate::CVector;

    fn swap() -> CMatrix {
        assemble_a(&PolynomialSpec::purity(2).unwrap(), DEFAULT_CAP).unwrap()
    }

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&v| c64(v, 0.0))))
    }

    fn pure_pair() -> TensorState {
        let psi = CVector::from_vec(vec![c64(0.6, 0.0), c64(0.0, -0.8)]);
        tensor_power(&DensityMatrix::from_pure(&psi).unwrap(), 2, DEFAULT_CAP).unwrap()
    }

    #[test]
    fn scale_factor_examples() {
        // margin makes this 1 + 1e-9 rather than exactly 1
        assert!((scale_factor(&swap()).unwrap() - 1.0).abs() <= 2e-9);
        let c = scale_factor(&diag(&[3.0, -1.0])).unwrap();
        assert!((c - 3.0).abs() < 1e-8 && c > 3.0);
        assert_eq!(scale_factor(&CMatrix::zeros(3, 3)).unwrap(), 1.0);
        assert!(scale_factor(&crate::state_gen::random_matrix(2, 2, 0)).is_err());
    }

    #[test]
    fn embed_zero_is_i() {
        let emb = embed_unitary(&CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(emb.scale, 1.0);
        assert!(max_abs_diff(&emb.u, &(identity(2) * c64(0.0, 1.0))) < 1e-14);
    }

    #[test]
    fn embed_swap() {
        let emb = embed_unitary(&swap()).unwrap();
        // sqrt(1 - 1/c^2) ~ 4.5e-5 from the scale margin
        assert!(max_abs_diff(&emb.u, &swap()) < 1e-4);
        assert!(emb.unitarity_residual() <= 1e-10);
        assert!(emb.real_part_residual() <= 1e-10);
        let (phases, _) = unitary_eigen(&emb.u).unwrap();
        let mut cosines: Vec<f64> = phases.iter().map(|t| t.cos()).collect();
        cosines.sort_by(f64::total_cmp);
        for (c, e) in cosines.iter().zip([-1.0, 1.0, 1.0, 1.0]) {
            assert!((c - e).abs() < 1e-8);
        }
    }

    #[test]
    fn embed_random_hermitian() {
        for seed in 0..5 {
            let o = random_hermitian(8, seed);
            let emb = embed_unitary(&o).unwrap();
            assert!(emb.scale > 1.0);
            assert!(emb.unitarity_residual() <= 1e-10);
            assert!(emb.real_part_residual() <= 1e-10);
        }
    }

    #[test]
    fn circuit_with_identity() {
        let emb = EmbeddedUnitary::from_unitary(identity(4)).unwrap();
        let t = tensor_power(&random_density(2, 2, 0), 2, DEFAULT_CAP).unwrap();
        assert!((run_circuit_exact(&emb, &t).unwrap() - 1.0).abs() < 1e-12);
        let est = sample_control(&emb, &t, 1000, 0).unwrap();
        assert_eq!(est.raw.mean, 1.0);
        let check = e_operator_check(&emb, &t).unwrap();
        assert!(check.max_deviation() < 1e-12);
        assert!(max_abs_diff(&e_operator(&[0.0; 4], &identity(4)), &identity(8)) < 1e-15);
    }

    #[test]
    fn circuit_with_swap() {
        let emb = embed_unitary(&swap()).unwrap();
        // raw <Z> is <O>/c with c = 1 + 1e-9
        let z = run_circuit_exact(&emb, &pure_pair()).unwrap();
        assert!((emb.scale * z - 1.0).abs() < 1e-10);
        let mixed = tensor_power(&DensityMatrix::maximally_mixed(2), 2, DEFAULT_CAP).unwrap();
        let z = run_circuit_exact(&emb, &mixed).unwrap();
        assert!((emb.scale * z - 0.5).abs() < 1e-10);
        assert!((z - formula_expectation(&emb, &mixed).unwrap()).abs() < 1e-10);

        let est = sample_control(&emb, &mixed, 100_000, 3).unwrap().rescaled();
        assert!((est.mean - 0.5).abs() <= 5.0 * est.stderr);
    }

    #[test]
    fn control_state_matches_circuit() {
        for seed in 0..5 {
            let o = random_hermitian(4, seed);
            let emb = embed_unitary(&o).unwrap();
            let t = tensor_power(&random_density(2, 2, seed + 3), 2, DEFAULT_CAP).unwrap();
            let reduced = control_state(&emb, &t).unwrap();
            let z = (reduced[(0, 0)] - reduced[(1, 1)]).re;
            assert!((z - run_circuit_exact(&emb, &t).unwrap()).abs() < 1e-10);
            assert!((trace(&reduced) - c64(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn e_operator_three_way_agreement() {
        let emb = embed_unitary(&swap()).unwrap();
        let product = crate::tensor_ops::kron(random_density(2, 2, 1).matrix(), random_density(2, 2, 2).matrix());
        let t = TensorState::from_joint(2, 2, product).unwrap();
        assert!(e_operator_check(&emb, &t).unwrap().max_deviation() <= 1e-10);

        let spec = random_polynomial(2, 2, 5, false, 6);
        let pair = hermitian_pair(&assemble_a(&spec, DEFAULT_CAP).unwrap()).unwrap();
        for o in [&pair.o_real, &pair.o_imag] {
            let emb = embed_unitary(o).unwrap();
            let t = tensor_power(&random_density(2, 2, 7), 2, DEFAULT_CAP).unwrap();
            assert!(e_operator_check(&emb, &t).unwrap().max_deviation() <= 1e-10);
        }
    }

    #[test]
    fn per_eigenstate_cosines() {
        let emb = embed_unitary(&random_hermitian(4, 12)).unwrap();
        for (z, cos) in eigenstate_expectations(&emb, 2, 2).unwrap() {
            assert!((z - cos).abs() <= 1e-10);
        }
    }

    #[test]
    fn unitary_eigen_of_cyclic_shift() {
        let s = crate::shift_bell::cyclic_shift(2, 3, DEFAULT_CAP).unwrap();
        let (phases, vectors) = unitary_eigen(&s).unwrap();
        assert!(unitarity_deviation(&vectors) < 1e-10);
        let mut rebuilt = CMatrix::zeros(8, 8);
        for (j, &theta) in phases.iter().enumerate() {
            let phi = vectors.column(j);
            rebuilt += phi * phi.adjoint() * C64::from_polar(1.0, theta);
        }
        assert!(max_abs(&(rebuilt - s)) < 1e-10);
    }

    #[test]
    fn dimension_and_unitarity_errors() {
        let emb = embed_unitary(&swap()).unwrap();
        let t = tensor_power(&DensityMatrix::maximally_mixed(2), 3, DEFAULT_CAP).unwrap();
        assert!(matches!(run_circuit_exact(&emb, &t), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(EmbeddedUnitary::from_unitary(diag(&[1.0, 2.0])), Err(Error::NotUnitary { .. })));
        let t2 = tensor_power(&DensityMatrix::maximally_mixed(2), 2, DEFAULT_CAP).unwrap();
        assert!(sample_control(&emb, &t2, 1, 0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let emb = embed_unitary(&random_hermitian(4, 2)).unwrap();
        let t = tensor_power(&random_density(2, 2, 2), 2, DEFAULT_CAP).unwrap();
        assert_eq!(sample_control(&emb, &t, 5000, 8).unwrap(), sample_control(&emb, &t, 5000, 8).unwrap());
    }
}

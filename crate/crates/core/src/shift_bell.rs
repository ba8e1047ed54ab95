//! Purity special cases: the cyclic shift operator with
//! `Tr{S rho^{(x)m}} = Tr rho^m`, and the two-qubit Bell-basis circuit
//! (CNOT then Hadamard on the first qubit) that measures the swap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hadamard::{sample_control_with, EmbeddedUnitary};
use crate::poly_model::{validate_state, DensityMatrix};
use crate::sampler::{estimate_distribution, ShotEstimate};
use crate::spectral::OutcomeDistribution;
use crate::tensor_ops::{copy_permutation, kron, tensor_power, trace, trace_product};
use crate::{c64, CMatrix, CVector};

const PURITY_TOL: f64 = 1e-12;

/// Fixed one- and two-qubit gates. CNOT uses the first (most significant)
/// qubit as control.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSet {
    pub hadamard: CMatrix,
    pub cnot: CMatrix,
    pub pauli_z: CMatrix,
    pub pauli_x: CMatrix,
}

impl GateSet {
    pub fn standard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = |v: f64| c64(v, 0.0);
        Self {
            hadamard: CMatrix::from_row_slice(2, 2, &[r(h), r(h), r(h), r(-h)]),
            cnot: CMatrix::from_row_slice(
                4,
                4,
                &[
                    r(1.0),
                    r(0.0),
                    r(0.0),
                    r(0.0),
                    r(0.0),
                    r(1.0),
                    r(0.0),
                    r(0.0),
                    r(0.0),
                    r(0.0),
                    r(0.0),
                    r(1.0),
                    r(0.0),
                    r(0.0),
                    r(1.0),
                    r(0.0),
                ],
            ),
            pauli_z: CMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(-1.0)]),
            pauli_x: CMatrix::from_row_slice(2, 2, &[r(0.0), r(1.0), r(1.0), r(0.0)]),
        }
    }
}

/// `S |psi_1 ... psi_m> = |psi_m psi_1 ... psi_{m-1}>` as a permutation matrix.
pub fn cyclic_shift(d: usize, m: usize, cap: usize) -> Result<CMatrix> {
    if m == 0 {
        return Err(Error::ZeroCopies);
    }
    // output slot 0 carries input slot m-1, slot s carries s-1
    let perm: Vec<usize> = (0..m).map(|s| (s + m - 1) % m).collect();
    copy_permutation(d, &perm, cap)
}

/// `Tr{S rho^{(x)m}}`, cross-checked against `Tr rho^m` computed by repeated
/// multiplication. Fails if the two differ by more than `1e-12` or the
/// imaginary residual exceeds `1e-12`.
pub fn purity_exact(state: &DensityMatrix, m: usize, cap: usize) -> Result<f64> {
    let shift = cyclic_shift(state.dim(), m, cap)?;
    let joint = tensor_power(state, m, cap)?;
    let via_shift = trace_product(&shift, joint.matrix());

    let rho = state.matrix();
    let mut power = rho.clone();
    for _ in 1..m {
        power = &power * rho;
    }
    let direct = trace(&power);

    if (via_shift - direct).norm() > PURITY_TOL {
        return Err(Error::Consistency(format!("Tr{{S rho^m}} = {via_shift} differs from Tr rho^m = {direct}")));
    }
    if via_shift.im.abs() > PURITY_TOL {
        return Err(Error::Consistency(format!("purity has imaginary part {}", via_shift.im)));
    }
    Ok(via_shift.re)
}

/// The Bell states with their swap eigenvalues:
/// `(|00> + |11>)/sqrt2 : +1`, `(|00> - |11>)/sqrt2 : +1`,
/// `(|01> + |10>)/sqrt2 : +1`, `(|01> - |10>)/sqrt2 : -1`.
pub fn bell_eigenbasis() -> [(CVector, f64); 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v =
        |a: f64, b: f64, c: f64, d: f64| CVector::from_vec(vec![c64(a, 0.0), c64(b, 0.0), c64(c, 0.0), c64(d, 0.0)]);
    [(v(h, 0.0, 0.0, h), 1.0), (v(h, 0.0, 0.0, -h), 1.0), (v(0.0, h, h, 0.0), 1.0), (v(0.0, h, -h, 0.0), -1.0)]
}

/// `(H (x) I) CNOT`, mapping the Bell states onto computational basis states.
pub fn bell_circuit() -> CMatrix {
    let g = GateSet::standard();
    kron(&g.hadamard, &CMatrix::identity(2, 2)) * g.cnot
}

/// Swap eigenvalue assigned to each two-bit outcome `00, 01, 10, 11`.
pub const BELL_OUTCOME_VALUES: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

/// Computational-basis outcome probabilities after the Bell circuit, valued
/// by the swap eigenvalue of the Bell state each outcome identifies.
pub fn bell_circuit_distribution(joint: &CMatrix) -> Result<OutcomeDistribution> {
    if joint.shape() != (4, 4) {
        return Err(Error::DimensionMismatch { expected: 4, found: joint.nrows() });
    }
    let valid = validate_state(joint.clone())?;
    let c = bell_circuit();
    let out = &c * valid.matrix() * c.adjoint();
    let probabilities = (0..4).map(|k| out[(k, k)].re).collect();
    OutcomeDistribution::new(probabilities, BELL_OUTCOME_VALUES.to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PurityMethod {
    /// `Tr{S rho^{(x)m}}` evaluated directly.
    SwapExact,
    /// Sampled Bell-basis measurement on two qubit copies.
    BellSample,
    /// Control-qubit test on the cyclic shift.
    Hadamard,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PurityReport {
    pub method: PurityMethod,
    pub copies: usize,
    pub estimate: f64,
    /// Absent for the exact method.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Estimates `Tr rho^m` by the chosen method. The sampled methods attach the
/// exact value when `include_exact` is set.
pub fn estimate_purity(
    state: &DensityMatrix,
    m: usize,
    method: PurityMethod,
    shots: u64,
    seed: u64,
    cap: usize,
    include_exact: bool,
) -> Result<PurityReport> {
    let exact = purity_exact(state, m, cap)?;
    let sampled: ShotEstimate = match method {
        PurityMethod::SwapExact => {
            return Ok(PurityReport {
                method,
                copies: m,
                estimate: exact,
                stderr: None,
                shots: None,
                exact: None,
                seed: None,
            });
        }
        PurityMethod::BellSample => {
            if state.dim() != 2 || m != 2 {
                return Err(Error::Consistency(format!(
                    "bell-sample needs a qubit and m = 2 (got d = {}, m = {m})",
                    state.dim()
                )));
            }
            let joint = tensor_power(state, 2, cap)?;
            let dist = bell_circuit_distribution(joint.matrix())?;
            estimate_distribution(&dist, shots, seed, Execution::default())?
        }
        PurityMethod::Hadamard => {
            let emb = EmbeddedUnitary::from_unitary(cyclic_shift(state.dim(), m, cap)?)?;
            let joint = tensor_power(state, m, cap)?;
            sample_control_with(&emb, &joint, shots, seed, Execution::default())?.rescaled()
        }
    };
    Ok(PurityReport {
        method,
        copies: m,
        estimate: sampled.mean,
        stderr: Some(sampled.stderr),
        shots: Some(sampled.shots),
        exact: include_exact.then_some(exact),
        seed: Some(seed),
    })
}

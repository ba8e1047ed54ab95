//! Seeded shot sampling and polynomial estimates with error bars.
//!
//! Sampling rule (pinned for reproducibility):
//!
//! * shots are cut into consecutive batches of [`BATCH_SHOTS`]; batch `b`
//!   draws from `Xoshiro256PlusPlus::seed_from_u64(seed + b)` (wrapping);
//! * each shot takes `u = (next_u64 >> 11) * 2^-53` and returns the first
//!   outcome `j` with `u < p_0 + ... + p_j`, or the last outcome with
//!   positive probability if rounding leaves `u` above the final sum.
//!
//! Batches are independent, so they may run in parallel; results are merged
//! as outcome counts and do not depend on the execution mode.
//!
//! For a polynomial, the real part `O_f` samples with the caller's seed and
//! the imaginary part `O'_f` with `seed + 2^63`.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hadamard::{embed_unitary, sample_control_with};
use crate::observable::{assemble_a, hermitian_pair, symmetrize};
use crate::poly_model::{evaluate_exact, homogenize_to, DensityMatrix, PolynomialSpec};
use crate::spectral::{eigh, outcome_distribution, OutcomeDistribution, SpectralDecomposition};
use crate::tensor_ops::{tensor_power, TensorState, DEFAULT_CAP};
use crate::{c64, CMatrix, C64};

/// Shots per independently seeded batch.
pub const BATCH_SHOTS: u64 = 8192;
/// Seed offset for the imaginary-part stream.
pub const IMAG_SEED_OFFSET: u64 = 1 << 63;
/// Frobenius norm below which `O'_f` is treated as zero.
pub const ZERO_OPERATOR_TOL: f64 = 1e-12;

const TWO_POW_MINUS_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Cumulative table for inverse-CDF sampling.
struct Cdf {
    cumulative: Vec<f64>,
    fallback: usize,
}

impl Cdf {
    fn new(dist: &OutcomeDistribution) -> Self {
        let mut acc = 0.0;
        let cumulative = dist
            .probabilities()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let fallback = dist.probabilities().iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Self { cumulative, fallback }
    }

    fn draw(&self, u: f64) -> usize {
        let j = self.cumulative.partition_point(|&c| c <= u);
        if j < self.cumulative.len() {
            j
        } else {
            self.fallback
        }
    }
}

fn uniform(rng: &mut Xoshiro256PlusPlus) -> f64 {
    (rng.next_u64() >> 11) as f64 * TWO_POW_MINUS_53
}

fn batch_bounds(shots: u64, batch: u64) -> (u64, u64) {
    let start = batch * BATCH_SHOTS;
    (start, (start + BATCH_SHOTS).min(shots))
}

fn batch_count(shots: u64) -> usize {
    shots.div_ceil(BATCH_SHOTS) as usize
}

/// I.i.d. outcome indices drawn from `dist`.
pub fn sample_outcomes(dist: &OutcomeDistribution, shots: u64, seed: u64) -> Vec<usize> {
    sample_outcomes_with(dist, shots, seed, Execution::default())
}

pub fn sample_outcomes_with(dist: &OutcomeDistribution, shots: u64, seed: u64, exec: Execution) -> Vec<usize> {
    let cdf = Cdf::new(dist);
    exec.map_indexed(batch_count(shots), |b| {
        let (start, end) = batch_bounds(shots, b as u64);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed.wrapping_add(b as u64));
        (start..end).map(|_| cdf.draw(uniform(&mut rng))).collect::<Vec<_>>()
    })
    .concat()
}

/// Histogram of [`sample_outcomes_with`] without materializing the shots.
pub fn outcome_counts_with(dist: &OutcomeDistribution, shots: u64, seed: u64, exec: Execution) -> Vec<u64> {
    let cdf = Cdf::new(dist);
    let n = dist.len();
    let partial = exec.map_indexed(batch_count(shots), |b| {
        let (start, end) = batch_bounds(shots, b as u64);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed.wrapping_add(b as u64));
        let mut counts = vec![0u64; n];
        for _ in start..end {
            counts[cdf.draw(uniform(&mut rng))] += 1;
        }
        counts
    });
    partial.into_iter().fold(vec![0u64; n], |mut acc, c| {
        acc.iter_mut().zip(c).for_each(|(a, x)| *a += x);
        acc
    })
}

/// Sample mean with standard error `s / sqrt(N)`, `s` the unbiased sample
/// standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShotEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub shots: u64,
}

impl ShotEstimate {
    /// Statistics of `counts[j]` occurrences of `values[j]`.
    pub fn from_counts(values: &[f64], counts: &[u64]) -> Result<Self> {
        let shots: u64 = counts.iter().sum();
        if shots < 2 {
            return Err(Error::TooFewShots { shots, min: 2 });
        }
        let n = shots as f64;
        let mean = values.iter().zip(counts).map(|(o, &k)| o * k as f64).sum::<f64>() / n;
        let ss: f64 = values.iter().zip(counts).map(|(o, &k)| k as f64 * (o - mean).powi(2)).sum();
        let stderr = (ss / (n - 1.0) / n).sqrt();
        Ok(Self { mean, stderr, shots })
    }

    /// Multiplies mean and standard error by `factor`.
    pub fn scaled(self, factor: f64) -> Self {
        Self { mean: self.mean * factor, stderr: self.stderr * factor.abs(), shots: self.shots }
    }
}

/// Samples `dist` and summarizes the eigenvalue-weighted outcomes.
pub fn estimate_distribution(
    dist: &OutcomeDistribution,
    shots: u64,
    seed: u64,
    exec: Execution,
) -> Result<ShotEstimate> {
    if shots < 2 {
        return Err(Error::TooFewShots { shots, min: 2 });
    }
    let counts = outcome_counts_with(dist, shots, seed, exec);
    ShotEstimate::from_counts(dist.values(), &counts)
}

/// Rotated standard-basis measurement of an observable, weighting outcome
/// `j` with `o_j`.
pub fn estimate_observable(
    decomp: &SpectralDecomposition,
    state: &TensorState,
    shots: u64,
    seed: u64,
) -> Result<ShotEstimate> {
    estimate_observable_with(decomp, state, shots, seed, Execution::default())
}

pub fn estimate_observable_with(
    decomp: &SpectralDecomposition,
    state: &TensorState,
    shots: u64,
    seed: u64,
    exec: Execution,
) -> Result<ShotEstimate> {
    if shots < 2 {
        return Err(Error::TooFewShots { shots, min: 2 });
    }
    let dist = outcome_distribution(decomp, state)?;
    estimate_distribution(&dist, shots, seed, exec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Eigenbasis rotation followed by a standard-basis measurement.
    #[default]
    Eigen,
    /// Control-qubit test on the unitary embedding of each Hermitian part.
    Hadamard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub method: Method,
    pub symmetrize: bool,
    /// Lift to this degree instead of the polynomial's own.
    pub degree: Option<usize>,
    pub cap: usize,
    pub include_exact: bool,
    pub execution: Execution,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            method: Method::Eigen,
            symmetrize: false,
            degree: None,
            cap: DEFAULT_CAP,
            include_exact: true,
            execution: Execution::default(),
        }
    }
}

/// Shot-based estimate of a polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimate: C64,
    pub stderr_real: f64,
    pub stderr_imag: f64,
    pub shots_real: u64,
    pub shots_imag: u64,
    pub exact: Option<C64>,
    pub seed: u64,
    pub method: Method,
    /// Embedding scale `c` of the real and imaginary parts (Hadamard method).
    pub scale: Option<(f64, f64)>,
}

impl EstimateReport {
    /// `|estimate - exact|` per part.
    pub fn deviation(&self) -> Option<(f64, f64)> {
        self.exact.map(|e| ((self.estimate.re - e.re).abs(), (self.estimate.im - e.im).abs()))
    }

    /// Whether each part lies within `k` standard errors of the exact value.
    pub fn within_sigma(&self, k: f64) -> Option<bool> {
        self.deviation().map(|(dr, di)| dr <= k * self.stderr_real && di <= k * self.stderr_imag)
    }
}

/// Homogenizes, assembles, optionally symmetrizes and splits the operator.
pub fn compile_operator(spec: &PolynomialSpec, options: &EstimateOptions) -> Result<(PolynomialSpec, CMatrix)> {
    let target = options.degree.unwrap_or(spec.degree());
    let lifted = homogenize_to(spec, target)?;
    let mut a = assemble_a(&lifted, options.cap)?;
    if options.symmetrize {
        a = symmetrize(&a, lifted.dim(), lifted.degree())?;
    }
    Ok((lifted, a))
}

/// Estimates `f(rho) = <O_f> + i <O'_f>` from shots with the default options
/// and the given method.
pub fn estimate_polynomial(
    spec: &PolynomialSpec,
    state: &DensityMatrix,
    shots: u64,
    seed: u64,
    method: Method,
) -> Result<EstimateReport> {
    let options = EstimateOptions { method, ..EstimateOptions::default() };
    estimate_polynomial_with(spec, state, shots, seed, &options)
}

/// Full pipeline. Shots are split evenly between `O_f` and `O'_f` (the real
/// part gets the odd shot); when `O'_f` vanishes every shot goes to `O_f` and
/// the imaginary part is reported as exactly zero.
pub fn estimate_polynomial_with(
    spec: &PolynomialSpec,
    state: &DensityMatrix,
    shots: u64,
    seed: u64,
    options: &EstimateOptions,
) -> Result<EstimateReport> {
    if spec.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: state.dim() });
    }
    let (lifted, a) = compile_operator(spec, options)?;
    let pair = hermitian_pair(&a)?;
    let joint = tensor_power(state, lifted.degree(), options.cap)?;

    let imag_is_zero = pair.o_imag.norm() <= ZERO_OPERATOR_TOL;
    let (shots_real, shots_imag) = if imag_is_zero { (shots, 0) } else { (shots - shots / 2, shots / 2) };
    let min = if imag_is_zero { 2 } else { 4 };
    if shots < min {
        return Err(Error::TooFewShots { shots, min });
    }

    let measure = |o: &CMatrix, n: u64, part_seed: u64| -> Result<(ShotEstimate, f64)> {
        match options.method {
            Method::Eigen => {
                let decomp = eigh(o)?;
                Ok((estimate_observable_with(&decomp, &joint, n, part_seed, options.execution)?, 1.0))
            }
            Method::Hadamard => {
                let emb = embed_unitary(o)?;
                let c = sample_control_with(&emb, &joint, n, part_seed, options.execution)?;
                Ok((c.rescaled(), emb.scale))
            }
        }
    };

    let (real, scale_real) = measure(&pair.o_real, shots_real, seed)?;
    let (imag, scale_imag) = if imag_is_zero {
        (ShotEstimate { mean: 0.0, stderr: 0.0, shots: 0 }, 1.0)
    } else {
        measure(&pair.o_imag, shots_imag, seed.wrapping_add(IMAG_SEED_OFFSET))?
    };

    let exact = if options.include_exact { Some(evaluate_exact(spec, state)?) } else { None };
    Ok(EstimateReport {
        estimate: c64(real.mean, imag.mean),
        stderr_real: real.stderr,
        stderr_imag: imag.stderr,
        shots_real,
        shots_imag,
        exact,
        seed,
        method: options.method,
        scale: (options.method == Method::Hadamard).then_some((scale_real, scale_imag)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::assemble_a;
    use crate::state_gen::{random_density, random_hermitian, random_polynomial};
    use crate::tensor_ops::identity;
    use crate::CVector;

    fn dist(p: &[f64]) -> OutcomeDistribution {
        OutcomeDistribution::new(p.to_vec(), (0..p.len()).map(|j| j as f64).collect()).unwrap()
    }

    fn pure_qubit() -> DensityMatrix {
        DensityMatrix::from_pure(&CVector::from_vec(vec![c64(0.8, 0.0), c64(0.36, 0.48)])).unwrap()
    }

    #[test]
    fn certain_outcome() {
        let d = dist(&[1.0, 0.0, 0.0]);
        assert!(sample_outcomes(&d, 20_000, 3).iter().all(|&j| j == 0));
        let d = dist(&[0.0, 0.0, 1.0]);
        assert!(sample_outcomes(&d, 100, 3).iter().all(|&j| j == 2));
    }

    #[test]
    fn uniform_frequencies() {
        // binomial sd at 1e5 shots is ~0.0014, so 0.01 is a 7-sigma band
        let d = dist(&[0.25; 4]);
        let counts = outcome_counts_with(&d, 100_000, 11, Execution::default());
        for c in counts {
            assert!((c as f64 / 1e5 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let d = dist(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(sample_outcomes(&d, 20_000, 42), sample_outcomes(&d, 20_000, 42));
        assert_ne!(sample_outcomes(&d, 1000, 42), sample_outcomes(&d, 1000, 43));
    }

    #[test]
    fn execution_modes_agree() {
        let d = dist(&[0.1, 0.2, 0.3, 0.4]);
        let seq = sample_outcomes_with(&d, 50_000, 9, Execution::Sequential);
        let par = sample_outcomes_with(&d, 50_000, 9, Execution::Parallel);
        assert_eq!(seq, par);
        let mut hist = vec![0u64; 4];
        seq.iter().for_each(|&j| hist[j] += 1);
        assert_eq!(hist, outcome_counts_with(&d, 50_000, 9, Execution::Parallel));
    }

    #[test]
    fn prefix_stream_is_stable() {
        // shots in the first batches do not depend on the total count
        let d = dist(&[0.3, 0.7]);
        let long = sample_outcomes(&d, 3 * BATCH_SHOTS, 5);
        let short = sample_outcomes(&d, BATCH_SHOTS + 10, 5);
        assert_eq!(&long[..short.len()], &short[..]);
    }

    #[test]
    fn from_counts_statistics() {
        let est = ShotEstimate::from_counts(&[1.0, -1.0], &[3, 1]).unwrap();
        assert_eq!(est.mean, 0.5);
        // sample variance of {1,1,1,-1} is 1, stderr sqrt(1/4)
        assert!((est.stderr - 0.5).abs() < 1e-15);
        assert!(ShotEstimate::from_counts(&[1.0], &[1]).is_err());
    }

    #[test]
    fn identity_observable() {
        let decomp = eigh(&identity(4)).unwrap();
        let t = tensor_power(&random_density(2, 2, 1), 2, DEFAULT_CAP).unwrap();
        let est = estimate_observable(&decomp, &t, 1000, 0).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
        assert!(matches!(estimate_observable(&decomp, &t, 1, 0), Err(Error::TooFewShots { .. })));
    }

    #[test]
    fn swap_on_mixed_pair() {
        let swap = assemble_a(&PolynomialSpec::purity(2).unwrap(), DEFAULT_CAP).unwrap();
        let decomp = eigh(&swap).unwrap();
        let t = tensor_power(&DensityMatrix::maximally_mixed(2), 2, DEFAULT_CAP).unwrap();
        let est = estimate_observable(&decomp, &t, 100_000, 7).unwrap();
        assert!((est.mean - 0.5).abs() <= 5.0 * est.stderr);
    }

    #[test]
    fn swap_on_pure_pair() {
        let swap = assemble_a(&PolynomialSpec::purity(2).unwrap(), DEFAULT_CAP).unwrap();
        let decomp = eigh(&swap).unwrap();
        let t = tensor_power(&pure_qubit(), 2, DEFAULT_CAP).unwrap();
        let est = estimate_observable(&decomp, &t, 10_000, 7).unwrap();
        assert!((est.mean - 1.0).abs() < 1e-12);
        assert!(est.stderr < 1e-12);
    }

    #[test]
    fn polynomial_purity_on_mixed_qubit() {
        let spec = PolynomialSpec::purity(2).unwrap();
        let report = estimate_polynomial(&spec, &DensityMatrix::maximally_mixed(2), 100_000, 1, Method::Eigen).unwrap();
        assert_eq!(report.estimate.im, 0.0);
        assert_eq!(report.shots_imag, 0);
        assert_eq!(report.shots_real, 100_000);
        assert!((report.estimate.re - 0.5).abs() <= 5.0 * report.stderr_real);
        assert_eq!(report.exact, Some(c64(0.5, 0.0)));
    }

    #[test]
    fn polynomial_trace() {
        let spec = PolynomialSpec::trace(2).unwrap();
        let report = estimate_polynomial(&spec, &random_density(2, 2, 3), 1000, 1, Method::Eigen).unwrap();
        assert_eq!(report.estimate, c64(1.0, 0.0));
        assert_eq!(report.stderr_real, 0.0);
    }

    #[test]
    fn complex_polynomial_both_parts() {
        let spec = random_polynomial(2, 2, 5, false, 21);
        let rho = random_density(2, 2, 22);
        for method in [Method::Eigen, Method::Hadamard] {
            let report = estimate_polynomial(&spec, &rho, 100_000, 5, method).unwrap();
            assert_eq!(report.shots_real + report.shots_imag, 100_000);
            assert!(report.shots_imag > 0);
            assert_eq!(report.within_sigma(5.0), Some(true), "{method:?}: {report:?}");
        }
    }

    #[test]
    fn report_is_deterministic_and_mode_independent() {
        let spec = random_polynomial(2, 3, 6, true, 4);
        let rho = random_density(2, 1, 8);
        let mut opts = EstimateOptions { execution: Execution::Sequential, ..Default::default() };
        let a = estimate_polynomial_with(&spec, &rho, 30_000, 99, &opts).unwrap();
        opts.execution = Execution::Parallel;
        let b = estimate_polynomial_with(&spec, &rho, 30_000, 99, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stderr_halves_with_four_times_shots() {
        for seed in 0..5 {
            let o = random_hermitian(4, seed);
            let decomp = eigh(&o).unwrap();
            let t = tensor_power(&random_density(2, 2, seed + 7), 2, DEFAULT_CAP).unwrap();
            let small = estimate_observable(&decomp, &t, 20_000, seed).unwrap();
            let large = estimate_observable(&decomp, &t, 80_000, seed + 1).unwrap();
            let ratio = large.stderr / small.stderr;
            assert!((ratio - 0.5).abs() <= 0.1, "ratio {ratio}");
        }
    }

    #[test]
    fn options_degree_and_symmetrize() {
        let spec = PolynomialSpec::purity(2).unwrap();
        let rho = random_density(2, 2, 30);
        let opts = EstimateOptions { degree: Some(3), symmetrize: true, ..Default::default() };
        let report = estimate_polynomial_with(&spec, &rho, 100_000, 2, &opts).unwrap();
        assert_eq!(report.within_sigma(5.0), Some(true));

        let opts = EstimateOptions { degree: Some(1), ..Default::default() };
        assert!(estimate_polynomial_with(&spec, &rho, 100, 2, &opts).is_err());

        let opts = EstimateOptions { include_exact: false, ..Default::default() };
        assert_eq!(estimate_polynomial_with(&spec, &rho, 100, 2, &opts).unwrap().exact, None);
    }

    #[test]
    fn cap_is_enforced() {
        let spec = crate::parse_polynomial("r[0,0]*r[0,0]*r[0,0]*r[0,0]*r[0,0]", 2).unwrap();
        let opts = EstimateOptions { cap: 16, ..Default::default() };
        assert!(matches!(
            estimate_polynomial_with(&spec, &DensityMatrix::maximally_mixed(2), 100, 0, &opts),
            Err(Error::CapExceeded { .. })
        ));
    }
}

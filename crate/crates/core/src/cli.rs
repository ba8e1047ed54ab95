//! Command-line front end. Every command prints one JSON document on
//! standard output; diagnostics go to standard error.
//!
//! Exit codes: 0 success, 1 validation or runtime error (including a failed
//! `check`), 2 usage error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::error::Error;
use crate::hadamard::{e_operator_check, embed_unitary, formula_expectation, run_circuit_exact};
use crate::io::{matrix_rows, pair, ComplexPair, PolyFile, StateFile};
use crate::observable::{expectation, hermitian_pair};
use crate::poly_model::{evaluate_exact, parse_polynomial, DensityMatrix, PolynomialSpec};
use crate::sampler::{compile_operator, estimate_polynomial_with, EstimateOptions, Method};
use crate::shift_bell::{estimate_purity, purity_exact, PurityMethod};
use crate::spectral::{eigh, outcome_distribution};
use crate::state_gen::{generate, StateKind, StateRecipe};
use crate::tensor_ops::{max_abs_diff, tensor_power, trace_product, DEFAULT_CAP};
use crate::{c64, Execution};

#[derive(Debug, Parser)]
#[command(
    name = "polyobs",
    version,
    about = "Estimate polynomial functions of a density matrix from multi-copy measurements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the polynomial directly on the matrix entries.
    Exact(ExactArgs),
    /// Simulate shot-based estimation of the polynomial.
    Estimate(EstimateArgs),
    /// Estimate Tr rho^m.
    Purity(PurityArgs),
    /// Write a generated state in the JSON state format.
    GenState(GenStateArgs),
    /// Run the internal consistency checks on the given inputs.
    Check(CheckArgs),
    /// Export A_f or one of its Hermitian parts as a JSON matrix.
    Operator(OperatorArgs),
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct PolySource {
    /// Polynomial JSON file.
    #[arg(long, value_name = "PATH")]
    pub poly: Option<PathBuf>,
    /// Polynomial expression, e.g. "r[0,1]*r[1,0] + r[0,0]*r[1,1]".
    #[arg(long, value_name = "EXPR")]
    pub expr: Option<String>,
}

#[derive(Debug, Args)]
pub struct Compile {
    /// Lift every term to this degree.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Average the operator over all permutations of the copies.
    #[arg(long)]
    pub symmetrize: bool,
    /// Upper bound on d^m.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    /// State JSON file.
    #[arg(long, value_name = "PATH")]
    pub state: PathBuf,
    #[command(flatten)]
    pub source: PolySource,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_name = "PATH")]
    pub state: PathBuf,
    #[command(flatten)]
    pub source: PolySource,
    #[command(flatten)]
    pub compile: Compile,
    #[arg(long, default_value_t = 10_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Method::Eigen)]
    pub method: Method,
    /// Do not compute or attach the exact value.
    #[arg(long)]
    pub no_exact: bool,
}

#[derive(Debug, Args)]
pub struct PurityArgs {
    #[arg(long, value_name = "PATH")]
    pub state: PathBuf,
    /// Number of copies.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = PurityMethod::SwapExact)]
    pub method: PurityMethod,
    #[arg(long, default_value_t = 10_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
    #[arg(long)]
    pub no_exact: bool,
}

#[derive(Debug, Args)]
pub struct GenStateArgs {
    #[arg(long, value_enum)]
    pub kind: StateKind,
    #[arg(long)]
    pub dim: usize,
    /// Ginibre rank (defaults to dim).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Basis index for the computational kind (defaults to 0).
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, value_name = "PATH")]
    pub state: PathBuf,
    #[command(flatten)]
    pub source: PolySource,
    #[command(flatten)]
    pub compile: Compile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OperatorPart {
    A,
    Real,
    Imag,
}

#[derive(Debug, Args)]
pub struct OperatorArgs {
    /// Dimension of the single system (needed for --expr).
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    pub source: PolySource,
    #[command(flatten)]
    pub compile: Compile,
    #[arg(long, value_enum, default_value_t = OperatorPart::A)]
    pub part: OperatorPart,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {msg}")]
    Read { path: String, msg: String },
    #[error("cannot write {path}: {msg}")]
    Write { path: String, msg: String },
    #[error("invalid JSON in {path}: {msg}")]
    Json { path: String, msg: String },
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// What a command produced: the JSON text and the exit code to use.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub json: String,
    pub exit_code: i32,
}

impl Output {
    fn ok<T: Serialize>(value: &T) -> Self {
        Self { json: to_json(value), exit_code: 0 }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Read { path: path.display().to_string(), msg: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| CliError::Json { path: path.display().to_string(), msg: e.to_string() })
}

fn load_state(path: &Path) -> Result<DensityMatrix, CliError> {
    let file: StateFile = read_json(path)?;
    Ok(file.to_state()?)
}

fn load_polynomial(source: &PolySource, dim: Option<usize>) -> Result<PolynomialSpec, CliError> {
    match (&source.poly, &source.expr) {
        (Some(path), None) => {
            let file: PolyFile = read_json(path)?;
            let spec = file.to_spec()?;
            if let Some(d) = dim {
                if d != spec.dim() {
                    return Err(Error::DimensionMismatch { expected: d, found: spec.dim() }.into());
                }
            }
            Ok(spec)
        }
        (None, Some(text)) => {
            let d = dim.ok_or_else(|| CliError::Usage("--expr needs a dimension (--dim or --state)".into()))?;
            Ok(parse_polynomial(text, d)?)
        }
        _ => Err(CliError::Usage("give exactly one of --poly or --expr".into())),
    }
}

fn options(compile: &Compile) -> EstimateOptions {
    EstimateOptions {
        symmetrize: compile.symmetrize,
        degree: compile.degree,
        cap: compile.cap,
        ..EstimateOptions::default()
    }
}

#[derive(Serialize)]
struct ExactReport {
    exact: ComplexPair,
    dim: usize,
    degree: usize,
}

#[derive(Serialize)]
struct EstimateJson {
    estimate: ComplexPair,
    stderr: [f64; 2],
    shots: [u64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<ComplexPair>,
    seed: u64,
    method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound_5sigma: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    within_5sigma: Option<bool>,
}

#[derive(Serialize)]
struct OperatorJson {
    dim_total: usize,
    matrix: Vec<Vec<ComplexPair>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub exact: ComplexPair,
    pub checks: Vec<CheckItem>,
    pub pass: bool,
}

/// Consistency suite on one `(polynomial, state)` pair.
pub fn run_checks(spec: &PolynomialSpec, state: &DensityMatrix, opts: &EstimateOptions) -> crate::Result<CheckReport> {
    let mut checks = Vec::new();
    let mut push = |name: &str, deviation: f64, tolerance: f64| {
        checks.push(CheckItem { name: name.into(), deviation, tolerance, pass: deviation <= tolerance });
    };

    let exact = evaluate_exact(spec, state)?;
    let (lifted, a) = compile_operator(spec, opts)?;
    push("homogenize-invariance", (evaluate_exact(&lifted, state)? - exact).norm(), 1e-12);

    let pair_ops = hermitian_pair(&a)?;
    let rebuilt = &pair_ops.o_real + &pair_ops.o_imag * c64(0.0, 1.0);
    push("hermitian-split", max_abs_diff(&rebuilt, &a), 1e-14);

    let joint = tensor_power(state, lifted.degree(), opts.cap)?;
    let via_ops = expectation(&pair_ops.o_real, &joint)? + c64(0.0, 1.0) * expectation(&pair_ops.o_imag, &joint)?;
    push("multi-copy-identity", (via_ops - exact).norm(), 1e-10);

    for (label, o) in [("real", &pair_ops.o_real), ("imag", &pair_ops.o_imag)] {
        let decomp = eigh(o)?;
        push(&format!("spectral-reconstruction-{label}"), max_abs_diff(&decomp.reconstruct(), o), 1e-10);
        let dist = outcome_distribution(&decomp, &joint)?;
        let direct = trace_product(o, joint.matrix()).re;
        push(&format!("measurement-identity-{label}"), (dist.mean() - direct).abs(), 1e-10);

        let emb = embed_unitary(o)?;
        push(&format!("embedding-unitarity-{label}"), emb.unitarity_residual(), 1e-10);
        push(&format!("embedding-real-part-{label}"), emb.real_part_residual(), 1e-10);
        let circuit = run_circuit_exact(&emb, &joint)?;
        push(&format!("circuit-vs-formula-{label}"), (circuit - formula_expectation(&emb, &joint)?).abs(), 1e-10);
        push(&format!("circuit-vs-expectation-{label}"), (emb.scale * circuit - direct).abs(), 1e-10);
        push(&format!("e-operator-{label}"), e_operator_check(&emb, &joint)?.max_deviation(), 1e-10);
    }

    // purity_exact fails outright if Tr{S rho^2} and Tr rho^2 disagree
    let purity = purity_exact(state, 2, opts.cap)?;
    let swap_value = evaluate_exact(&PolynomialSpec::purity(state.dim())?, state)?;
    push("purity-shift-vs-entries", (swap_value - c64(purity, 0.0)).norm(), 1e-12);

    let pass = checks.iter().all(|c| c.pass);
    Ok(CheckReport { exact: pair(exact), checks, pass })
}

/// Runs one parsed command.
pub fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Exact(args) => {
            let state = load_state(&args.state)?;
            let spec = load_polynomial(&args.source, Some(state.dim()))?;
            let value = evaluate_exact(&spec, &state)?;
            Ok(Output::ok(&ExactReport { exact: pair(value), dim: spec.dim(), degree: spec.degree() }))
        }
        Command::Estimate(args) => {
            let state = load_state(&args.state)?;
            let spec = load_polynomial(&args.source, Some(state.dim()))?;
            let opts = EstimateOptions {
                method: args.method,
                include_exact: !args.no_exact,
                execution: Execution::default(),
                ..options(&args.compile)
            };
            let r = estimate_polynomial_with(&spec, &state, args.shots, args.seed, &opts)?;
            let bound = [5.0 * r.stderr_real, 5.0 * r.stderr_imag];
            Ok(Output::ok(&EstimateJson {
                estimate: pair(r.estimate),
                stderr: [r.stderr_real, r.stderr_imag],
                shots: [r.shots_real, r.shots_imag],
                exact: r.exact.map(pair),
                seed: r.seed,
                method: r.method,
                scale: r.scale.map(|(a, b)| [a, b]),
                deviation: r.deviation().map(|(a, b)| [a, b]),
                bound_5sigma: r.exact.map(|_| bound),
                within_5sigma: r.within_sigma(5.0),
            }))
        }
        Command::Purity(args) => {
            let state = load_state(&args.state)?;
            let report = estimate_purity(&state, args.m, args.method, args.shots, args.seed, args.cap, !args.no_exact)?;
            Ok(Output::ok(&report))
        }
        Command::GenState(args) => {
            let recipe =
                StateRecipe { kind: args.kind, dim: args.dim, rank: args.rank, index: args.index, seed: args.seed };
            let state = generate(&recipe)?;
            let text = to_json(&StateFile::from_state(&state, Some(recipe)));
            match &args.out {
                Some(path) => {
                    fs::write(path, format!("{text}\n"))
                        .map_err(|e| CliError::Write { path: path.display().to_string(), msg: e.to_string() })?;
                    Ok(Output::ok(&serde_json::json!({ "written": path.display().to_string() })))
                }
                None => Ok(Output { json: text, exit_code: 0 }),
            }
        }
        Command::Check(args) => {
            let state = load_state(&args.state)?;
            let spec = load_polynomial(&args.source, Some(state.dim()))?;
            let report = run_checks(&spec, &state, &options(&args.compile))?;
            let exit_code = if report.pass { 0 } else { 1 };
            Ok(Output { json: to_json(&report), exit_code })
        }
        Command::Operator(args) => {
            let spec = load_polynomial(&args.source, args.dim)?;
            let (_, a) = compile_operator(&spec, &options(&args.compile))?;
            let ops = hermitian_pair(&a)?;
            let m = match args.part {
                OperatorPart::A => &ops.a_f,
                OperatorPart::Real => &ops.o_real,
                OperatorPart::Imag => &ops.o_imag,
            };
            Ok(Output::ok(&OperatorJson { dim_total: m.nrows(), matrix: matrix_rows(m) }))
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<Output, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(&cli)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn mixed_qubit(dir: &Path) -> PathBuf {
        write(dir, "mixed.json", r#"{ "dim": 2, "entries": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]] }"#)
    }

    const PURITY_EXPR: &str = "r[0,0]*r[0,0] + r[0,1]*r[1,0] + r[1,0]*r[0,1] + r[1,1]*r[1,1]";

    #[test]
    fn exact_on_mixed_qubit() {
        let dir = tempfile::tempdir().unwrap();
        let state = mixed_qubit(dir.path());
        let out = run_from(["polyobs", "exact", "--state", state.to_str().unwrap(), "--expr", PURITY_EXPR]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        assert_eq!(v["exact"], serde_json::json!([0.5, 0.0]));
        assert_eq!(out.exit_code, 0);
    }

    #[test]
    fn usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let state = mixed_qubit(dir.path());
        let s = state.to_str().unwrap();
        let both = run_from(["polyobs", "exact", "--state", s, "--expr", "r[0,0]", "--poly", "p.json"]);
        assert_eq!(both.unwrap_err().exit_code(), 2);
        let neither = run_from(["polyobs", "exact", "--state", s]);
        assert_eq!(neither.unwrap_err().exit_code(), 2);
        let bad_method = run_from(["polyobs", "estimate", "--state", s, "--expr", "r[0,0]", "--method", "magic"]);
        assert_eq!(bad_method.unwrap_err().exit_code(), 2);
        let no_dim = run_from(["polyobs", "operator", "--expr", "r[0,0]"]);
        assert_eq!(no_dim.unwrap_err().exit_code(), 2);
    }

    #[test]
    fn validation_errors() {
        let dir = tempfile::tempdir().unwrap();
        let state = mixed_qubit(dir.path());
        let s = state.to_str().unwrap();

        let missing = run_from(["polyobs", "exact", "--state", "/nonexistent/x.json", "--expr", "r[0,0]"]).unwrap_err();
        assert_eq!(missing.exit_code(), 1);

        let garbage = write(dir.path(), "bad.json", "{ not json");
        let err = run_from(["polyobs", "exact", "--state", garbage.to_str().unwrap(), "--expr", "r[0,0]"]).unwrap_err();
        assert!(matches!(err, CliError::Json { .. }));

        let trace = write(dir.path(), "trace.json", r#"{ "dim": 2, "entries": [[[1,0],[0,0]],[[0,0],[0.1,0]]] }"#);
        let err = run_from(["polyobs", "exact", "--state", trace.to_str().unwrap(), "--expr", "r[0,0]"]).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("trace"));

        let big = vec!["r[0,0]"; 13].join("*");
        let err = run_from(["polyobs", "estimate", "--state", s, "--expr", big.as_str()]).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("cap exceeded"));

        let err = run_from(["polyobs", "exact", "--state", s, "--expr", "r[0,5]"]).unwrap_err();
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn estimate_report_fields() {
        let dir = tempfile::tempdir().unwrap();
        let state = mixed_qubit(dir.path());
        let out = run_from([
            "polyobs",
            "estimate",
            "--state",
            state.to_str().unwrap(),
            "--expr",
            PURITY_EXPR,
            "--shots",
            "20000",
            "--seed",
            "3",
            "--method",
            "hadamard",
        ])
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        for key in ["estimate", "stderr", "shots", "exact", "seed", "method", "scale"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["method"], "hadamard");
        assert_eq!(v["seed"], 3);
        assert_eq!(v["shots"], serde_json::json!([20000, 0]));

        let out =
            run_from(["polyobs", "estimate", "--state", state.to_str().unwrap(), "--expr", PURITY_EXPR, "--no-exact"])
                .unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        assert!(v.get("exact").is_none());
    }

    #[test]
    fn gen_state_and_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        run_from([
            "polyobs",
            "gen-state",
            "--kind",
            "ginibre",
            "--dim",
            "2",
            "--seed",
            "4",
            "--out",
            path.to_str().unwrap(),
        ])
        .unwrap();
        let file: StateFile = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(file.recipe.unwrap().kind, StateKind::Ginibre);

        let out = run_from([
            "polyobs",
            "check",
            "--state",
            path.to_str().unwrap(),
            "--expr",
            "(0.5-1i)*r[0,1]*r[1,1] + r[1,0]",
        ])
        .unwrap();
        let report: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        assert_eq!(report["pass"], true, "{}", out.json);
        assert_eq!(out.exit_code, 0);
    }

    #[test]
    fn operator_export() {
        let out = run_from(["polyobs", "operator", "--dim", "2", "--expr", PURITY_EXPR, "--part", "real"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        assert_eq!(v["dim_total"], 4);
        assert_eq!(v["matrix"][1][2], serde_json::json!([1.0, 0.0]));
    }

    #[test]
    fn purity_command() {
        let dir = tempfile::tempdir().unwrap();
        let state = mixed_qubit(dir.path());
        let out = run_from(["polyobs", "purity", "--state", state.to_str().unwrap(), "--m", "3"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        assert!((v["estimate"].as_f64().unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(v["method"], "swap-exact");
    }
}

//! Command front end: JSON run configurations, trajectory CSV emission,
//! figure-series reproduction, certificate verification, and the
//! worst-case-rate table. The `admm-lab` binary is a thin wrapper over the
//! functions here; everything returns data so library users (and the
//! examples) can drive the same plumbing without a subprocess.
//!
//! Exit-code contract: 0 success, 1 a verification check failed, 2 invalid
//! configuration or arguments, 3 solver failure, 4 I/O failure.

use crate::certificates::{
    best_theta_admm, best_theta_linadmm, certificate_rows, check_certificates,
    corollary_bregman_check, estimate_rate, optimal_rho_theta_admm, theta_admm, theta_linadmm,
    RateCertificate, SpectralBounds,
};
use crate::functions::{self, SeparableFunction};
use crate::linalg::{Matrix, Vector};
use crate::lowerbound::{admm_block, admm_optimal_rate, admm_worstcase_rate, linadmm_block, linadmm_rate_lowerbound};
use crate::problem::{Optimum, Problem};
use crate::solvers::{self, Algorithm, SolverConfig, SolverError, StartPoint, Trajectory};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

pub const CSV_HEADER: &str = "t,err,feas,gap,bregman_phi,bregman_g,r,r_star,delta";

/// Upper bound on concurrently running figure jobs (there are only 6).
pub const MAX_FIGURE_JOBS: usize = 6;

/// Environment variable capping the figure-job thread count.
pub const THREADS_ENV: &str = "ADMM_LAB_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad config file, bad flag value, bad dimensions: exit 2.
    Validation(String),
    /// A verification check failed: exit 1.
    CheckFailed(String),
    /// The solver broke down at runtime: exit 3.
    Solver(String),
    /// Filesystem trouble: exit 4.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::InvalidConfig { .. } | SolverError::WeakPreconditioner { .. } => {
            CliError::Validation(e.to_string())
        }
        _ => CliError::Solver(e.to_string()),
    }
}

// ---------------------------------------------------------------------------
// Config schema

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub problem: ProblemCfg,
    #[serde(default)]
    pub solver: SolverCfg,
    #[serde(default)]
    pub init: InitCfg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ProblemCfg {
    /// Scalar arctan-regularized smooth block against a quartic-plus-
    /// quadratic coupled block; optimum at the origin.
    #[serde(rename = "paper1d")]
    Paper1d {
        gamma: f64,
        lambda: f64,
        #[serde(default)]
        mu: f64,
    },
    /// Separable quadratics `phi = sum q_i w_i^2 / 2`, `g = sum lambda_i
    /// v_i^2 / 2` with identity couplings.
    #[serde(rename = "quadratic_diag")]
    QuadraticDiag { q: Vec<f64>, lambda: Vec<f64> },
    /// Fully explicit problem data.
    #[serde(rename = "custom")]
    Custom {
        phi: FunctionCfg,
        g: FunctionCfg,
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
        c: Vec<f64>,
        #[serde(default)]
        optimum: Option<OptimumCfg>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FunctionCfg {
    #[serde(rename = "quadratic_diag")]
    QuadraticDiag { diag: Vec<f64> },
    #[serde(rename = "arctan")]
    Arctan {
        gamma: f64,
        #[serde(default)]
        mu: f64,
    },
    #[serde(rename = "quartic")]
    Quartic { lambda: f64 },
    #[serde(rename = "tikhonov")]
    Tikhonov { base: Box<FunctionCfg>, epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimumCfg {
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgoCfg {
    Admm,
    Linadmm,
}

impl AlgoCfg {
    fn algorithm(self) -> Algorithm {
        match self {
            AlgoCfg::Admm => Algorithm::Standard,
            AlgoCfg::Linadmm => Algorithm::Linearized,
        }
    }
}

impl fmt::Display for AlgoCfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgoCfg::Admm => f.write_str("admm"),
            AlgoCfg::Linadmm => f.write_str("linadmm"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKeyword {
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixCfg {
    Keyword(MatrixKeyword),
    ScaledIdentity { scaled_identity: f64 },
    Rows(Vec<Vec<f64>>),
}

impl Default for MatrixCfg {
    fn default() -> Self {
        MatrixCfg::Keyword(MatrixKeyword::Zero)
    }
}

fn default_rho() -> f64 {
    1.0
}

fn default_iters() -> usize {
    400
}

fn default_inner_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverCfg {
    #[serde(default = "SolverCfg::default_algo")]
    pub algo: AlgoCfg,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(rename = "G", default)]
    pub g: MatrixCfg,
    #[serde(rename = "H", default)]
    pub h: MatrixCfg,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
}

impl SolverCfg {
    fn default_algo() -> AlgoCfg {
        AlgoCfg::Admm
    }
}

impl Default for SolverCfg {
    fn default() -> Self {
        SolverCfg {
            algo: AlgoCfg::Admm,
            rho: default_rho(),
            iters: default_iters(),
            g: MatrixCfg::default(),
            h: MatrixCfg::default(),
            inner_tol: default_inner_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitCfg {
    #[serde(default)]
    pub w: Option<Vec<f64>>,
    #[serde(default)]
    pub v: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
}

/// Parse a config file's text, reporting the position of any JSON fault.
pub fn parse_config(text: &str) -> Result<ConfigFile, CliError> {
    serde_json::from_str(text).map_err(|e| {
        CliError::Validation(format!("config parse error at line {}, column {}: {e}", e.line(), e.column()))
    })
}

fn positive_finite(x: f64, path: &str) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{path} must be a positive finite number (got {x})")))
    }
}

fn nonnegative_finite(x: f64, path: &str) -> Result<(), CliError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{path} must be a nonnegative finite number (got {x})")))
    }
}

fn finite_slice(xs: &[f64], path: &str) -> Result<(), CliError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{path} must contain only finite numbers")))
    }
}

fn build_function(cfg: &FunctionCfg, path: &str) -> Result<SeparableFunction, CliError> {
    match cfg {
        FunctionCfg::QuadraticDiag { diag } => {
            if diag.is_empty() {
                return Err(CliError::Validation(format!("{path}.diag must be nonempty")));
            }
            for (i, d) in diag.iter().enumerate() {
                nonnegative_finite(*d, &format!("{path}.diag[{i}]"))?;
            }
            SeparableFunction::diagonal_quadratic(diag)
                .map_err(|e| CliError::Validation(format!("{path}: {e}")))
        }
        FunctionCfg::Arctan { gamma, mu } => {
            positive_finite(*gamma, &format!("{path}.gamma"))?;
            nonnegative_finite(*mu, &format!("{path}.mu"))?;
            SeparableFunction::arctan_smooth(*gamma, *mu)
                .map_err(|e| CliError::Validation(format!("{path}: {e}")))
        }
        FunctionCfg::Quartic { lambda } => {
            nonnegative_finite(*lambda, &format!("{path}.lambda"))?;
            SeparableFunction::quartic_strong(*lambda)
                .map_err(|e| CliError::Validation(format!("{path}: {e}")))
        }
        FunctionCfg::Tikhonov { base, epsilon } => {
            positive_finite(*epsilon, &format!("{path}.epsilon"))?;
            let base = build_function(base, &format!("{path}.base"))?;
            SeparableFunction::tikhonov(base, *epsilon)
                .map_err(|e| CliError::Validation(format!("{path}: {e}")))
        }
    }
}

fn build_rows(rows: &[Vec<f64>], path: &str) -> Result<Matrix, CliError> {
    Matrix::from_rows(rows).map_err(|e| CliError::Validation(format!("{path}: {e}")))
}

/// Turn the `problem` section into a live [`Problem`], naming the offending
/// field path on every rejection.
pub fn materialize_problem(cfg: &ProblemCfg) -> Result<Problem, CliError> {
    match cfg {
        ProblemCfg::Paper1d { gamma, lambda, mu } => {
            positive_finite(*gamma, "problem.gamma")?;
            positive_finite(*lambda, "problem.lambda")?;
            nonnegative_finite(*mu, "problem.mu")?;
            Problem::arctan_quartic(*gamma, *lambda, *mu)
                .map_err(|e| CliError::Validation(format!("problem: {e}")))
        }
        ProblemCfg::QuadraticDiag { q, lambda } => {
            if q.is_empty() {
                return Err(CliError::Validation("problem.q must be nonempty".into()));
            }
            for (i, x) in q.iter().enumerate() {
                nonnegative_finite(*x, &format!("problem.q[{i}]"))?;
            }
            if lambda.len() != q.len() {
                return Err(CliError::Validation(format!(
                    "problem.lambda has length {} but problem.q has length {}",
                    lambda.len(),
                    q.len()
                )));
            }
            for (i, x) in lambda.iter().enumerate() {
                nonnegative_finite(*x, &format!("problem.lambda[{i}]"))?;
            }
            Problem::quadratic_diagonal(q, lambda)
                .map_err(|e| CliError::Validation(format!("problem: {e}")))
        }
        ProblemCfg::Custom { phi, g, a, b, c, optimum } => {
            let phi = build_function(phi, "problem.phi")?;
            let g = build_function(g, "problem.g")?;
            let a = build_rows(a, "problem.A")?;
            let b = build_rows(b, "problem.B")?;
            finite_slice(c, "problem.c")?;
            let c = Vector::from_slice(c);
            let optimum = match optimum {
                None => None,
                Some(o) => {
                    finite_slice(&o.w, "problem.optimum.w")?;
                    finite_slice(&o.v, "problem.optimum.v")?;
                    finite_slice(&o.alpha, "problem.optimum.alpha")?;
                    Some(Optimum {
                        w: Vector::from_slice(&o.w),
                        v: Vector::from_slice(&o.v),
                        alpha: Vector::from_slice(&o.alpha),
                    })
                }
            };
            Problem::custom(phi, g, a, b, c, optimum)
                .map_err(|e| CliError::Validation(format!("problem: {e}")))
        }
    }
}

fn materialize_matrix(cfg: &MatrixCfg, dim: usize, path: &str) -> Result<Matrix, CliError> {
    match cfg {
        MatrixCfg::Keyword(MatrixKeyword::Zero) => Ok(Matrix::zeros(dim, dim)),
        MatrixCfg::ScaledIdentity { scaled_identity } => {
            nonnegative_finite(*scaled_identity, &format!("{path}.scaled_identity"))?;
            Ok(Matrix::scaled_identity(dim, *scaled_identity))
        }
        MatrixCfg::Rows(rows) => {
            let m = build_rows(rows, path)?;
            if m.rows() != dim || m.cols() != dim {
                return Err(CliError::Validation(format!(
                    "{path} must be {dim}x{dim}, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            Ok(m)
        }
    }
}

fn materialize_init(cfg: &InitCfg, problem: &Problem) -> Result<StartPoint, CliError> {
    let mut start = StartPoint::default_for(problem);
    let fields: [(&Option<Vec<f64>>, usize, &str, &mut Vector); 3] = [
        (&cfg.w, problem.w_dim(), "init.w", &mut start.w),
        (&cfg.v, problem.v_dim(), "init.v", &mut start.v),
        (&cfg.alpha, problem.constraint_dim(), "init.alpha", &mut start.alpha),
    ];
    for (given, dim, path, slot) in fields {
        if let Some(xs) = given {
            finite_slice(xs, path)?;
            if xs.len() != dim {
                return Err(CliError::Validation(format!("{path} must have length {dim}, got {}", xs.len())));
            }
            *slot = Vector::from_slice(xs);
        }
    }
    Ok(start)
}

/// Turn a parsed config into runnable pieces.
pub fn materialize(cfg: &ConfigFile) -> Result<(Problem, SolverConfig, StartPoint), CliError> {
    let problem = materialize_problem(&cfg.problem)?;
    positive_finite(cfg.solver.rho, "solver.rho")?;
    positive_finite(cfg.solver.inner_tol, "solver.inner_tol")?;
    let g = materialize_matrix(&cfg.solver.g, problem.v_dim(), "solver.G")?;
    let h = materialize_matrix(&cfg.solver.h, problem.w_dim(), "solver.H")?;
    let solver = SolverConfig::build(
        &problem,
        cfg.solver.algo.algorithm(),
        cfg.solver.rho,
        g,
        h,
        cfg.solver.iters,
        cfg.solver.inner_tol,
        false,
    )
    .map_err(|e| CliError::Validation(format!("solver: {e}")))?;
    let start = materialize_init(&cfg.init, &problem)?;
    Ok((problem, solver, start))
}

// ---------------------------------------------------------------------------
// Trajectory CSV

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

/// Render a run as CSV: one row per iterate, empty cells where a quantity
/// is unavailable (no known optimum, or a conjugate evaluated outside its
/// domain). The gap-certificate columns use the reference pair
/// `(alpha*, v*)` and the certified `theta` when both exist.
pub fn trajectory_csv(problem: &Problem, cfg: &SolverConfig, traj: &Trajectory, theta: Option<f64>) -> String {
    let rows = match (theta, problem.optimum.as_ref()) {
        (Some(theta), Some(opt)) => certificate_rows(traj, problem, cfg, &opt.alpha, &opt.v, theta).ok(),
        _ => None,
    };
    let mut out = String::with_capacity(64 * (traj.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (idx, it) in traj.iterates.iter().enumerate() {
        let err = problem.error_norm(&it.w, &it.v).ok();
        let feas = problem.constraint_residual(&it.w, &it.v).norm();
        let gap = problem.duality_gap(&it.v, &it.alpha).ok();
        let (bregman_phi, bregman_g) = match problem.optimum.as_ref() {
            Some(opt) => (
                Some(functions::bregman(&problem.phi, &opt.w, &it.w)),
                Some(functions::bregman(&problem.g, &opt.v, &it.v)),
            ),
            None => (None, None),
        };
        let (r, r_star, delta) = match rows.as_ref() {
            Some(rows) => {
                let row = &rows[idx];
                if idx == 0 {
                    (None, None, Some(row.delta))
                } else {
                    (Some(row.r), Some(row.r_star), Some(row.delta))
                }
            }
            None => (None, None, None),
        };
        let cells = [
            it.t.to_string(),
            cell(err),
            cell(Some(feas)),
            cell(gap),
            cell(bregman_phi),
            cell(bregman_g),
            cell(r),
            cell(r_star),
            cell(delta),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// solve

#[derive(Debug, Clone, Default)]
pub struct SolveOverrides {
    pub rho: Option<f64>,
    pub iters: Option<usize>,
    pub algo: Option<String>,
}

fn apply_overrides(cfg: &mut ConfigFile, o: &SolveOverrides) -> Result<(), CliError> {
    if let Some(rho) = o.rho {
        positive_finite(rho, "--rho")?;
        cfg.solver.rho = rho;
    }
    if let Some(iters) = o.iters {
        cfg.solver.iters = iters;
    }
    if let Some(algo) = o.algo.as_deref() {
        cfg.solver.algo = match algo {
            "admm" => AlgoCfg::Admm,
            "linadmm" => AlgoCfg::Linadmm,
            other => {
                return Err(CliError::Validation(format!("--algo must be admm or linadmm (got {other})")))
            }
        };
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub pass: bool,
    pub worst_slack: f64,
    pub checks: usize,
}

/// What `solve` reports on standard output. The echoed config (with
/// overrides applied) re-runs to a byte-identical trajectory CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ConfigFile,
    pub estimated_rate: Option<f64>,
    pub theta: Option<f64>,
    pub rho_star: Option<f64>,
    pub final_error: Option<f64>,
    pub final_gap: Option<f64>,
    pub certificate: Option<CertificateSummary>,
    pub wall_time_ms: u64,
}

fn certified_theta(problem: &Problem, cfg: &SolverConfig) -> Option<f64> {
    RateCertificate::for_run(problem, cfg).ok().map(|c| c.theta)
}

fn unpreconditioned_rho_star(problem: &Problem, cfg: &SolverConfig) -> Option<f64> {
    let bounds = SpectralBounds::compute(problem, cfg).ok()?;
    let gamma = problem.gamma_phi();
    let lambda = problem.lambda_g();
    let coupling = bounds.sigma_b * bounds.sigma_b + bounds.sigma_g;
    if bounds.sigma_a > 0.0 && gamma > 0.0 && lambda > 0.0 && coupling > 0.0 {
        Some(optimal_rho_theta_admm(bounds.sigma_a, bounds.sigma_b, bounds.sigma_g, lambda, gamma).0)
    } else {
        None
    }
}

fn certificate_summary(
    problem: &Problem,
    cfg: &SolverConfig,
    traj: &Trajectory,
    theta: Option<f64>,
) -> Option<CertificateSummary> {
    let theta = theta?;
    let opt = problem.optimum.as_ref()?;
    let rows = certificate_rows(traj, problem, cfg, &opt.alpha, &opt.v, theta).ok()?;
    let gaps = check_certificates(&rows, theta);
    let bregman = corollary_bregman_check(traj, problem, cfg, theta).ok()?;
    Some(CertificateSummary {
        pass: gaps.pass && bregman.pass,
        worst_slack: gaps.worst_slack.min(bregman.worst_slack),
        checks: gaps.checks + bregman.checks,
    })
}

/// Run a config and write its trajectory CSV; the returned report is the
/// command's standard output.
pub fn cmd_solve(config_path: &Path, overrides: &SolveOverrides, out_path: &Path) -> Result<RunReport, CliError> {
    let mut cfg = parse_config(&read_file(config_path)?)?;
    apply_overrides(&mut cfg, overrides)?;
    let (problem, solver, start) = materialize(&cfg)?;
    let clock = Instant::now();
    let traj = solvers::run(&problem, &solver, &start).map_err(solver_error)?;
    let wall_time_ms = clock.elapsed().as_millis() as u64;
    let theta = certified_theta(&problem, &solver);
    write_file(out_path, &trajectory_csv(&problem, &solver, &traj, theta))?;
    let estimated_rate = traj.error_history(&problem).ok().and_then(|errs| estimate_rate(&errs).ok());
    let last = traj.last();
    Ok(RunReport {
        estimated_rate,
        theta,
        rho_star: unpreconditioned_rho_star(&problem, &solver),
        final_error: problem.error_norm(&last.w, &last.v).ok(),
        final_gap: problem.duality_gap(&last.v, &last.alpha).ok(),
        certificate: certificate_summary(&problem, &solver, &traj, theta),
        wall_time_ms,
        config: cfg,
    })
}

// ---------------------------------------------------------------------------
// figures

#[derive(Debug, Clone, Serialize)]
pub struct FigureRun {
    pub algo: String,
    pub rho_multiplier: f64,
    pub rho: f64,
    pub iters: usize,
    pub estimated_rate: f64,
    pub reference_rate: f64,
    pub csv: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FigureSummary {
    pub figure: u8,
    pub gamma: f64,
    pub lambda: f64,
    pub mu: f64,
    pub h: f64,
    pub rho_star: f64,
    pub runs: Vec<FigureRun>,
}

/// Benchmark parameters for a figure index: `(gamma, lambda, mu,
/// reference rates for the standard runs, for the linearized runs)`.
pub fn figure_parameters(which: u8) -> Result<(f64, f64, f64, [f64; 3], [f64; 3]), CliError> {
    match which {
        1 => Ok((0.1, 0.2, 0.2, [0.51, 0.21, 0.41], [0.51, 0.53, 0.64])),
        2 => Ok((1.0, 1.0, 1.0, [0.78, 0.49, 0.64], [0.82, 0.69, 0.82])),
        other => Err(CliError::Validation(format!("--which must be 1 or 2 (got {other})"))),
    }
}

pub const FIGURE_RHO_MULTIPLIERS: [f64; 3] = [0.2, 1.0, 5.0];

fn figure_thread_cap() -> usize {
    let hw = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(hw);
    cap.min(MAX_FIGURE_JOBS)
}

struct FigureJob {
    algo: AlgoCfg,
    multiplier: f64,
    iters: usize,
    reference: f64,
}

fn run_figure_job(
    job: &FigureJob,
    which: u8,
    gamma: f64,
    lambda: f64,
    mu: f64,
    h: f64,
    rho_star: f64,
    out_dir: &Path,
) -> Result<FigureRun, CliError> {
    let problem = Problem::arctan_quartic(gamma, lambda, mu)
        .map_err(|e| CliError::Validation(format!("problem: {e}")))?;
    let rho = job.multiplier * rho_star;
    let h_mat = match job.algo {
        AlgoCfg::Admm => Matrix::zeros(1, 1),
        AlgoCfg::Linadmm => Matrix::scaled_identity(1, h),
    };
    let solver = SolverConfig::build(
        &problem,
        job.algo.algorithm(),
        rho,
        Matrix::zeros(1, 1),
        h_mat,
        job.iters,
        solvers::DEFAULT_INNER_TOL,
        false,
    )
    .map_err(solver_error)?;
    let start = StartPoint::default_for(&problem);
    let traj = solvers::run(&problem, &solver, &start).map_err(solver_error)?;
    let errors = traj.error_history(&problem).map_err(|e| CliError::Solver(e.to_string()))?;
    let estimated_rate = estimate_rate(&errors).map_err(|e| CliError::Solver(e.to_string()))?;
    let csv_name = format!("fig{which}_{}_rho{}.csv", job.algo, job.multiplier);
    let theta = certified_theta(&problem, &solver);
    write_file(&out_dir.join(&csv_name), &trajectory_csv(&problem, &solver, &traj, theta))?;
    Ok(FigureRun {
        algo: job.algo.to_string(),
        rho_multiplier: job.multiplier,
        rho,
        iters: job.iters,
        estimated_rate,
        reference_rate: job.reference,
        csv: csv_name,
    })
}

/// Reproduce one benchmark figure: 3 step sizes x 2 algorithms, run in
/// parallel (capped by `ADMM_LAB_THREADS`), one trajectory CSV per run plus
/// a `rates.json` summary in `out_dir`.
pub fn cmd_figures(which: u8, out_dir: &Path) -> Result<FigureSummary, CliError> {
    let (gamma, lambda, mu, ref_std, ref_lin) = figure_parameters(which)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let rho_star = (lambda / gamma).sqrt();
    let h = 2.0 * (mu + 1.0 / gamma);
    let lin_iters = if which == 1 { 800 } else { 400 };
    let jobs: Vec<FigureJob> = FIGURE_RHO_MULTIPLIERS
        .iter()
        .enumerate()
        .map(|(i, &m)| FigureJob { algo: AlgoCfg::Admm, multiplier: m, iters: 400, reference: ref_std[i] })
        .chain(FIGURE_RHO_MULTIPLIERS.iter().enumerate().map(|(i, &m)| FigureJob {
            algo: AlgoCfg::Linadmm,
            multiplier: m,
            iters: lin_iters,
            reference: ref_lin[i],
        }))
        .collect();

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<FigureRun, CliError>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let workers = figure_thread_cap();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let out = run_figure_job(&jobs[i], which, gamma, lambda, mu, h, rho_star, out_dir);
                results.lock().expect("no poisoned figure worker").as_mut_slice()[i] = Some(out);
            });
        }
    });
    let mut runs = Vec::with_capacity(jobs.len());
    for slot in results.into_inner().expect("workers joined") {
        runs.push(slot.expect("every job ran")?);
    }
    let summary = FigureSummary { figure: which, gamma, lambda, mu, h, rho_star, runs };
    let rates_json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Io(format!("cannot serialize rates: {e}")))?;
    write_file(&out_dir.join("rates.json"), &rates_json)?;
    Ok(summary)
}

/// Human-readable comparison of measured rates against the reference
/// values the figure documents.
pub fn render_figure_table(summary: &FigureSummary) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "figure {} (gamma={}, lambda={}, mu={}, h={}, rho*={:.6})\n",
        summary.figure, summary.gamma, summary.lambda, summary.mu, summary.h, summary.rho_star
    ));
    out.push_str(&format!(
        "{:<9} {:>8} {:>12} {:>10} {:>10} {:>8}\n",
        "algo", "rho/rho*", "rho", "measured", "reference", "|diff|"
    ));
    for run in &summary.runs {
        out.push_str(&format!(
            "{:<9} {:>8} {:>12.6} {:>10.4} {:>10.4} {:>8.4}\n",
            run.algo,
            run.rho_multiplier,
            run.rho,
            run.estimated_rate,
            run.reference_rate,
            (run.estimated_rate - run.reference_rate).abs()
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// certify

#[derive(Debug, Clone, Serialize)]
pub struct CertifySummary {
    pub algo: String,
    pub rho: f64,
    pub s: f64,
    pub theta: f64,
    pub theta_certified: f64,
    pub steps: usize,
    pub pass: bool,
    pub worst_slack: f64,
    pub tolerance: f64,
    pub first_violation: Option<String>,
}

/// How `certify` picks its contraction parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaMode {
    Auto,
    Value(f64),
}

impl ThetaMode {
    pub fn parse(arg: &str) -> Result<ThetaMode, CliError> {
        if arg == "auto" {
            return Ok(ThetaMode::Auto);
        }
        match arg.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(ThetaMode::Value(v)),
            _ => Err(CliError::Validation(format!(
                "--theta must be 'auto' or a nonnegative number (got {arg})"
            ))),
        }
    }
}

/// Run a config and verify every gap inequality and the Bregman sum bound
/// against the certified (or user-supplied) `theta`. A `theta` beyond the
/// certified bound triggers a warning on standard error but still runs.
pub fn cmd_certify(config_path: &Path, s: Option<f64>, theta_mode: &ThetaMode) -> Result<CertifySummary, CliError> {
    let cfg = parse_config(&read_file(config_path)?)?;
    let (problem, solver, start) = materialize(&cfg)?;
    let opt = problem
        .optimum
        .clone()
        .ok_or_else(|| CliError::Validation("certify needs a problem with a known optimum".into()))?;
    if let Some(s) = s {
        if !(0.0..1.0).contains(&s) {
            return Err(CliError::Validation(format!("--s must be in [0, 1) (got {s})")));
        }
    }
    let bounds = SpectralBounds::compute(&problem, &solver).map_err(|e| CliError::Validation(e.to_string()))?;
    let gamma = problem.gamma_phi();
    let lambda = problem.lambda_g();
    let (theta_certified, s_used) = match (solver.algorithm, s) {
        (Algorithm::Standard, Some(s)) => (theta_admm(&bounds, gamma, lambda, solver.rho, s), s),
        (Algorithm::Standard, None) => best_theta_admm(&bounds, gamma, lambda, solver.rho),
        (Algorithm::Linearized, Some(s)) => (
            theta_linadmm(&bounds, gamma, lambda, solver.rho, s)
                .map_err(|e| CliError::Validation(e.to_string()))?,
            s,
        ),
        (Algorithm::Linearized, None) => {
            best_theta_linadmm(&bounds, gamma, lambda, solver.rho).map_err(|e| CliError::Validation(e.to_string()))?
        }
    };
    let theta = match theta_mode {
        ThetaMode::Auto => theta_certified,
        ThetaMode::Value(v) => {
            if *v > theta_certified * (1.0 + 1e-12) {
                eprintln!(
                    "warning: theta {v} exceeds the certified bound {theta_certified}; the checks will likely fail"
                );
            }
            *v
        }
    };
    let traj = solvers::run(&problem, &solver, &start).map_err(solver_error)?;
    let rows = certificate_rows(&traj, &problem, &solver, &opt.alpha, &opt.v, theta)
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let gaps = check_certificates(&rows, theta);
    let bregman =
        corollary_bregman_check(&traj, &problem, &solver, theta).map_err(|e| CliError::Solver(e.to_string()))?;
    let first_violation = gaps
        .first_violation
        .or(bregman.first_violation)
        .map(|v| format!("{} at t={} (slack {:e})", v.family, v.index, v.slack));
    Ok(CertifySummary {
        algo: cfg.solver.algo.to_string(),
        rho: solver.rho,
        s: s_used,
        theta,
        theta_certified,
        steps: traj.len() - 1,
        pass: gaps.pass && bregman.pass,
        worst_slack: gaps.worst_slack.min(bregman.worst_slack),
        tolerance: gaps.tolerance.max(bregman.tolerance),
        first_violation,
    })
}

// ---------------------------------------------------------------------------
// lowerbound

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundRow {
    pub rho: f64,
    pub worstcase: f64,
    pub admm_block_radius: f64,
    pub lin_lowerbound: f64,
    pub lin_block_radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundTable {
    pub gamma: f64,
    pub lambda: f64,
    pub rho_star: f64,
    pub optimal_rate: f64,
    pub h: f64,
    pub rows: Vec<LowerBoundRow>,
}

fn parse_rho_grid(arg: &str) -> Result<(f64, f64, usize), CliError> {
    let parts: Vec<&str> = arg.split(':').collect();
    let bad = || CliError::Validation(format!("--rho-grid must be lo:hi:n with lo,hi > 0 and n >= 1 (got {arg})"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo && n >= 1) {
        return Err(bad());
    }
    Ok((lo, hi, n))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

/// Tabulate the worst-case rates over a step-size grid: the standard
/// closed form and its realizing block radii, plus the linearized floor
/// for the heavy preconditioner `h = 2/gamma` on the soft pair `q = lambda`.
pub fn cmd_lowerbound(gamma: f64, lambda: f64, rho_grid: Option<&str>) -> Result<LowerBoundTable, CliError> {
    positive_finite(gamma, "--gamma")?;
    positive_finite(lambda, "--lambda")?;
    let (rho_star, optimal_rate) =
        admm_optimal_rate(lambda, gamma).map_err(|e| CliError::Validation(e.to_string()))?;
    let (lo, hi, n) = match rho_grid {
        Some(arg) => parse_rho_grid(arg)?,
        None => (rho_star / 10.0, rho_star * 10.0, 13),
    };
    let h = 2.0 / gamma;
    let mut rows = Vec::with_capacity(n);
    for rho in log_grid(lo, hi, n) {
        let worstcase = admm_worstcase_rate(rho, lambda, gamma).map_err(|e| CliError::Validation(e.to_string()))?;
        let admm_block_radius = admm_block(lambda, lambda, rho)
            .spectral_radius()
            .max(admm_block(1.0 / gamma, 1.0 / gamma, rho).spectral_radius());
        let lin_lowerbound =
            linadmm_rate_lowerbound(rho, lambda, h, lambda).map_err(|e| CliError::Validation(e.to_string()))?;
        let lin_block_radius = linadmm_block(lambda, lambda, h, rho).spectral_radius();
        rows.push(LowerBoundRow { rho, worstcase, admm_block_radius, lin_lowerbound, lin_block_radius });
    }
    Ok(LowerBoundTable { gamma, lambda, rho_star, optimal_rate, h, rows })
}

pub fn render_lowerbound_table(table: &LowerBoundTable) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "worst-case rates for gamma={}, lambda={} (optimal rho={:.6}, rate={:.6}; linearized h=2/gamma={})\n",
        table.gamma, table.lambda, table.rho_star, table.optimal_rate, table.h
    ));
    out.push_str(&format!(
        "{:>12} {:>12} {:>12} {:>12} {:>12}\n",
        "rho", "worst-case", "block-radius", "lin-floor", "lin-radius"
    ));
    for row in &table.rows {
        out.push_str(&format!(
            "{:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6}\n",
            row.rho, row.worstcase, row.admm_block_radius, row.lin_lowerbound, row.lin_block_radius
        ));
    }
    out
}

//! The two solver loops: standard ADMM and linearized ADMM, both with
//! optional proximal preconditioning.
//!
//! One step updates `v`, then `w`, then the multiplier `alpha` — in that
//! order. The `v`-subproblem carries a `(rho/2)|v - v_prev|_G^2` proximal
//! term while the `w`-subproblem carries `(1/2)|w - w_prev|_H^2`; the
//! asymmetric scaling is deliberate and pinned by test.

use crate::functions::{self, FunctionError};
use crate::linalg::{LinalgError, Matrix, Vector, PSD_TOL};
use crate::problem::{Problem, ProblemError};
use std::fmt;

/// Runs stop early once the distance to a known optimum falls below this;
/// everything past it is round-off noise.
pub const ERROR_FLOOR: f64 = 1e-14;

/// Default residual tolerance for the inner scalar solves.
pub const DEFAULT_INNER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Standard,
    Linearized,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Standard => write!(f, "admm"),
            Algorithm::Linearized => write!(f, "linadmm"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    InvalidConfig { what: String },
    WeakPreconditioner { min_eigenvalue: f64, required: f64 },
    Inner { step: usize, source: FunctionError },
    Linalg(LinalgError),
    Problem(String),
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::InvalidConfig { what } => write!(f, "invalid solver configuration: {what}"),
            SolverError::WeakPreconditioner { min_eigenvalue, required } => write!(
                f,
                "linearized solver needs min-eig(H) >= smoothness of phi ({required:e}), got {min_eigenvalue:e}"
            ),
            SolverError::Inner { step, source } => write!(f, "inner solve failed at iteration {step}: {source}"),
            SolverError::Linalg(e) => write!(f, "{e}"),
            SolverError::Problem(what) => write!(f, "{what}"),
        }
    }
}

impl std::error::Error for SolverError {}

impl From<LinalgError> for SolverError {
    fn from(e: LinalgError) -> Self {
        SolverError::Linalg(e)
    }
}

impl From<ProblemError> for SolverError {
    fn from(e: ProblemError) -> Self {
        SolverError::Problem(e.to_string())
    }
}

/// Validated solver parameters plus the derived constraint-space weight
/// `H_tilde = A^{-T} H A^{-1}` that the certificates need.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub rho: f64,
    pub g_precond: Matrix,
    pub h_precond: Matrix,
    pub h_tilde: Matrix,
    pub max_iters: usize,
    pub inner_tol: f64,
}

impl SolverConfig {
    /// Unpreconditioned configuration (`G = H = 0`).
    pub fn new(
        problem: &Problem,
        algorithm: Algorithm,
        rho: f64,
        max_iters: usize,
    ) -> Result<SolverConfig, SolverError> {
        let g = Matrix::zeros(problem.v_dim(), problem.v_dim());
        let h = Matrix::zeros(problem.w_dim(), problem.w_dim());
        Self::build(problem, algorithm, rho, g, h, max_iters, DEFAULT_INNER_TOL, false)
    }

    /// Full constructor. `allow_weak_h` overrides the linearized-mode
    /// requirement that `min-eig(H)` covers the smoothness of `phi`.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        problem: &Problem,
        algorithm: Algorithm,
        rho: f64,
        g_precond: Matrix,
        h_precond: Matrix,
        max_iters: usize,
        inner_tol: f64,
        allow_weak_h: bool,
    ) -> Result<SolverConfig, SolverError> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(SolverError::InvalidConfig { what: format!("rho must be finite and > 0 (got {rho})") });
        }
        if !(inner_tol.is_finite() && inner_tol > 0.0) {
            return Err(SolverError::InvalidConfig { what: "inner_tol must be finite and > 0".into() });
        }
        let (m, n, p) = (problem.v_dim(), problem.w_dim(), problem.constraint_dim());
        if g_precond.rows() != m || g_precond.cols() != m {
            return Err(SolverError::InvalidConfig {
                what: format!("G must be {m}x{m}, got {}x{}", g_precond.rows(), g_precond.cols()),
            });
        }
        if h_precond.rows() != n || h_precond.cols() != n {
            return Err(SolverError::InvalidConfig {
                what: format!("H must be {n}x{n}, got {}x{}", h_precond.rows(), h_precond.cols()),
            });
        }
        let (g_min, _) = if g_precond.is_zero() {
            (0.0, 0.0)
        } else {
            g_precond.extreme_eigenvalues_symmetric()?
        };
        if g_min < PSD_TOL {
            return Err(SolverError::InvalidConfig {
                what: format!("G must be positive semidefinite (min eigenvalue {g_min:e})"),
            });
        }
        let (h_min, _) = if h_precond.is_zero() {
            (0.0, 0.0)
        } else {
            h_precond.extreme_eigenvalues_symmetric()?
        };
        if h_min < PSD_TOL {
            return Err(SolverError::InvalidConfig {
                what: format!("H must be positive semidefinite (min eigenvalue {h_min:e})"),
            });
        }
        if algorithm == Algorithm::Linearized && !allow_weak_h {
            let required = problem.phi.smoothness();
            if required.is_finite() {
                if h_min < required * (1.0 - 1e-12) {
                    return Err(SolverError::WeakPreconditioner { min_eigenvalue: h_min, required });
                }
            } else {
                return Err(SolverError::InvalidConfig {
                    what: "linearized solver requires smooth phi (finite curvature)".into(),
                });
            }
        }
        // H_tilde = A^{-T} H A^{-1}; zero H needs no invertibility at all.
        let h_tilde = if h_precond.is_zero() {
            Matrix::zeros(p, p)
        } else {
            if p != n {
                return Err(SolverError::InvalidConfig {
                    what: format!("nonzero H needs square invertible A ({p}x{n} given)"),
                });
            }
            let a_inv = problem.a.pseudo_inverse()?;
            a_inv.transpose().matmul(&h_precond).matmul(&a_inv)
        };
        Ok(SolverConfig {
            algorithm,
            rho,
            g_precond,
            h_precond,
            h_tilde,
            max_iters,
            inner_tol,
        })
    }
}

/// One primal-dual state. `alpha_tilde` is the certificate multiplier
/// `alpha + H_tilde A (w_t - w_{t-1})`; it equals `alpha` at the start point
/// and whenever `H = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub t: usize,
    pub w: Vector,
    pub v: Vector,
    pub alpha: Vector,
    pub alpha_tilde: Vector,
}

/// Where a run starts; defaults to all-ones primal blocks and a zero multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct StartPoint {
    pub w: Vector,
    pub v: Vector,
    pub alpha: Vector,
}

impl StartPoint {
    pub fn default_for(problem: &Problem) -> StartPoint {
        StartPoint {
            w: Vector::ones(problem.w_dim()),
            v: Vector::ones(problem.v_dim()),
            alpha: Vector::zeros(problem.constraint_dim()),
        }
    }
}

/// An ordered run history, starting with the initial point at `t = 0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub iterates: Vec<Iterate>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    pub fn last(&self) -> &Iterate {
        self.iterates.last().expect("trajectory always holds the start point")
    }

    /// Distance-to-optimum per iterate (needs a known optimum).
    pub fn error_history(&self, problem: &Problem) -> Result<Vec<f64>, ProblemError> {
        self.iterates.iter().map(|it| problem.error_norm(&it.w, &it.v)).collect()
    }
}

fn v_update(problem: &Problem, cfg: &SolverConfig, cur: &Iterate) -> Result<Vector, FunctionError> {
    // argmin_v g(v) - alpha^T B v + (rho/2)|A w_prev - B v - c|^2 + (rho/2)|v - v_prev|_G^2
    let bt = problem.b.transpose();
    let aw_minus_c = problem.a.matvec(&cur.w).sub(&problem.c);
    let p = bt.matmul(&problem.b).add(&cfg.g_precond).scale(cfg.rho);
    let b_vec = bt
        .matvec(&cur.alpha)
        .scale(-1.0)
        .add_scaled(-cfg.rho, &bt.matvec(&aw_minus_c))
        .add_scaled(-cfg.rho, &cfg.g_precond.matvec(&cur.v));
    functions::subproblem_solve(&problem.g, &b_vec, &p, &Vector::zeros(problem.v_dim()), cfg.inner_tol)
}

fn alpha_tilde(cfg: &SolverConfig, problem: &Problem, alpha_new: &Vector, w_new: &Vector, w_prev: &Vector) -> Vector {
    if cfg.h_tilde.is_zero() {
        alpha_new.clone()
    } else {
        alpha_new.add(&cfg.h_tilde.matvec(&problem.a.matvec(&w_new.sub(w_prev))))
    }
}

/// One standard-ADMM step: exact `v` and `w` subproblem solves, then the
/// multiplier ascent `alpha += rho (A w - B v - c)`.
pub fn admm_step(problem: &Problem, cfg: &SolverConfig, cur: &Iterate) -> Result<Iterate, SolverError> {
    let step = cur.t + 1;
    let wrap = |e: FunctionError| SolverError::Inner { step, source: e };
    let v_new = v_update(problem, cfg, cur).map_err(wrap)?;
    // argmin_w phi(w) + alpha^T A w + (rho/2)|A w - B v_new - c|^2 + (1/2)|w - w_prev|_H^2
    let at = problem.a.transpose();
    let bv_plus_c = problem.b.matvec(&v_new).add(&problem.c);
    let p = at.matmul(&problem.a).scale(cfg.rho).add(&cfg.h_precond);
    let b_vec = at
        .matvec(&cur.alpha)
        .add_scaled(-cfg.rho, &at.matvec(&bv_plus_c))
        .sub(&cfg.h_precond.matvec(&cur.w));
    let w_new =
        functions::subproblem_solve(&problem.phi, &b_vec, &p, &Vector::zeros(problem.w_dim()), cfg.inner_tol)
            .map_err(wrap)?;
    let alpha_new = cur.alpha.add_scaled(cfg.rho, &problem.constraint_residual(&w_new, &v_new));
    let a_tilde = alpha_tilde(cfg, problem, &alpha_new, &w_new, &cur.w);
    Ok(Iterate { t: step, w: w_new, v: v_new, alpha: alpha_new, alpha_tilde: a_tilde })
}

/// One linearized-ADMM step: same `v` and `alpha` updates, but the `w`-update
/// solves the linear system `(H + rho A^T A) w = H w_prev - grad phi(w_prev)
/// - A^T alpha + rho A^T (B v_new + c)`.
pub fn linadmm_step(problem: &Problem, cfg: &SolverConfig, cur: &Iterate) -> Result<Iterate, SolverError> {
    let step = cur.t + 1;
    let v_new = v_update(problem, cfg, cur).map_err(|e| SolverError::Inner { step, source: e })?;
    let at = problem.a.transpose();
    let system = cfg.h_precond.add(&at.matmul(&problem.a).scale(cfg.rho));
    let bv_plus_c = problem.b.matvec(&v_new).add(&problem.c);
    let rhs = cfg
        .h_precond
        .matvec(&cur.w)
        .sub(&problem.phi.gradient(&cur.w))
        .sub(&at.matvec(&cur.alpha))
        .add_scaled(cfg.rho, &at.matvec(&bv_plus_c));
    let w_new = system.solve_spd(&rhs)?;
    let alpha_new = cur.alpha.add_scaled(cfg.rho, &problem.constraint_residual(&w_new, &v_new));
    let a_tilde = alpha_tilde(cfg, problem, &alpha_new, &w_new, &cur.w);
    Ok(Iterate { t: step, w: w_new, v: v_new, alpha: alpha_new, alpha_tilde: a_tilde })
}

/// Advance `cur` by one step of whichever algorithm the config selects.
pub fn step(problem: &Problem, cfg: &SolverConfig, cur: &Iterate) -> Result<Iterate, SolverError> {
    match cfg.algorithm {
        Algorithm::Standard => admm_step(problem, cfg, cur),
        Algorithm::Linearized => linadmm_step(problem, cfg, cur),
    }
}

/// Run from `start` for `cfg.max_iters` steps (stopping early at the error
/// floor when the optimum is known), invoking `observer` on every new iterate.
pub fn run_observed(
    problem: &Problem,
    cfg: &SolverConfig,
    start: &StartPoint,
    mut observer: impl FnMut(&Iterate),
) -> Result<Trajectory, SolverError> {
    if start.w.len() != problem.w_dim()
        || start.v.len() != problem.v_dim()
        || start.alpha.len() != problem.constraint_dim()
    {
        return Err(SolverError::InvalidConfig { what: "start point dimensions disagree with the problem".into() });
    }
    let mut iterates = Vec::with_capacity(cfg.max_iters + 1);
    iterates.push(Iterate {
        t: 0,
        w: start.w.clone(),
        v: start.v.clone(),
        alpha: start.alpha.clone(),
        alpha_tilde: start.alpha.clone(),
    });
    for _ in 0..cfg.max_iters {
        let next = step(problem, cfg, iterates.last().unwrap())?;
        observer(&next);
        let stop = match &problem.optimum {
            Some(_) => problem.error_norm(&next.w, &next.v)? < ERROR_FLOOR,
            None => false,
        };
        iterates.push(next);
        if stop {
            break;
        }
    }
    Ok(Trajectory { iterates })
}

/// `run_observed` without a callback.
pub fn run(problem: &Problem, cfg: &SolverConfig, start: &StartPoint) -> Result<Trajectory, SolverError> {
    run_observed(problem, cfg, start, |_| {})
}

/// Residuals of the three per-step optimality identities; used by tests and
/// the certificate machinery to confirm a step did what it claims.
pub fn stationarity_residuals(
    problem: &Problem,
    cfg: &SolverConfig,
    prev: &Iterate,
    cur: &Iterate,
) -> (f64, f64, f64) {
    // alpha-update identity: alpha_t - alpha_{t-1} = rho (A w_t - B v_t - c)
    let alpha_res = cur
        .alpha
        .sub(&prev.alpha)
        .sub(&problem.constraint_residual(&cur.w, &cur.v).scale(cfg.rho))
        .norm_inf();
    // w-stationarity: grad phi(w_x) + A^T alpha_t = H (w_{t-1} - w_t),
    // with w_x = w_t (standard) or w_{t-1} (linearized)
    let grad_point = match cfg.algorithm {
        Algorithm::Standard => &cur.w,
        Algorithm::Linearized => &prev.w,
    };
    let w_res = problem
        .phi
        .gradient(grad_point)
        .add(&problem.a.transpose().matvec(&cur.alpha))
        .sub(&cfg.h_precond.matvec(&prev.w.sub(&cur.w)))
        .norm_inf();
    // v-stationarity: grad g(v_t) - B^T alpha_t = -rho G (v_t - v_{t-1}) + rho B^T A (w_{t-1} - w_t)
    let v_res = problem
        .g
        .gradient(&cur.v)
        .sub(&problem.b.transpose().matvec(&cur.alpha))
        .add_scaled(cfg.rho, &cfg.g_precond.matvec(&cur.v.sub(&prev.v)))
        .add_scaled(
            -cfg.rho,
            &problem.b.transpose().matvec(&problem.a.matvec(&prev.w.sub(&cur.w))),
        )
        .norm_inf();
    (alpha_res, w_res, v_res)
}

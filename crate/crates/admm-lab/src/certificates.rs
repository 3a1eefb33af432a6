//! Rate certificates: the contraction parameter `theta` from the spectral
//! bounds of the problem data, the per-step and weighted-sum gap
//! inequalities it guarantees, Bregman-divergence convergence checks,
//! weighted iterate averaging, the smoothing schedule for merely-convex
//! targets, and empirical rate estimation from error trajectories.
//!
//! The central objects are the per-iterate rows `(r_t, r*_t, delta_t)`:
//! `r_t` is a primal gap against a reference pair, `r*_t` the matching dual
//! gap, and `delta_t` a weighted squared distance to the reference. The
//! analysis promises `r_t <= (1+theta)^{-1} delta_{t-1} - delta_t` for every
//! step (same for `r*_t`), which telescopes into geometric decay of both
//! gaps. `check_certificates` verifies all of it numerically.

use crate::functions::{self, FunctionError};
use crate::linalg::{weighted_norm_sq, LinalgError, Vector};
use crate::problem::{Problem, ProblemError};
use crate::solvers::{Algorithm, SolverConfig, Trajectory};
use std::fmt;

/// Slack below `-1e-9 * (1 + scale)` counts as a violation; anything closer
/// to zero is round-off.
pub const SLACK_TOL: f64 = 1e-9;

/// Error floor and relative drop defining the measurement window of
/// [`estimate_rate`].
pub const RATE_FLOOR: f64 = 1e-10;
pub const RATE_DROP: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub enum CertificateError {
    Precondition { what: String },
    DegenerateTrajectory { what: String },
    Function(FunctionError),
    Linalg(LinalgError),
    Problem(String),
}

impl fmt::Display for CertificateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertificateError::Precondition { what } => write!(f, "precondition violated: {what}"),
            CertificateError::DegenerateTrajectory { what } => write!(f, "degenerate trajectory: {what}"),
            CertificateError::Function(e) => write!(f, "{e}"),
            CertificateError::Linalg(e) => write!(f, "{e}"),
            CertificateError::Problem(what) => write!(f, "{what}"),
        }
    }
}

impl std::error::Error for CertificateError {}

impl From<FunctionError> for CertificateError {
    fn from(e: FunctionError) -> Self {
        CertificateError::Function(e)
    }
}

impl From<LinalgError> for CertificateError {
    fn from(e: LinalgError) -> Self {
        CertificateError::Linalg(e)
    }
}

impl From<ProblemError> for CertificateError {
    fn from(e: ProblemError) -> Self {
        CertificateError::Problem(e.to_string())
    }
}

/// The spectral quantities of the problem data that enter the rate bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    /// Smallest eigenvalue of `(A A^T)^{1/2}`.
    pub sigma_a: f64,
    /// Largest singular value of `B`.
    pub sigma_b: f64,
    /// Largest eigenvalue of `G`.
    pub sigma_g: f64,
    /// Largest eigenvalue of `H`.
    pub sigma_h: f64,
    /// Smallest eigenvalue of `H`.
    pub sigma_h_min: f64,
    /// Largest eigenvalue of `H_tilde`.
    pub sigma_h_tilde: f64,
}

impl SpectralBounds {
    pub fn compute(problem: &Problem, cfg: &SolverConfig) -> Result<SpectralBounds, CertificateError> {
        let sigma_a = problem.a.smallest_row_singular_value()?;
        let sigma_b = problem.b.largest_singular_value()?;
        let sigma_g = if cfg.g_precond.is_zero() {
            0.0
        } else {
            cfg.g_precond.extreme_eigenvalues_symmetric()?.1.max(0.0)
        };
        let (sigma_h_min, sigma_h) = if cfg.h_precond.is_zero() {
            (0.0, 0.0)
        } else {
            let (lo, hi) = cfg.h_precond.extreme_eigenvalues_symmetric()?;
            (lo.max(0.0), hi.max(0.0))
        };
        let sigma_h_tilde = if cfg.h_tilde.is_zero() {
            0.0
        } else {
            cfg.h_tilde.extreme_eigenvalues_symmetric()?.1.max(0.0)
        };
        Ok(SpectralBounds { sigma_a, sigma_b, sigma_g, sigma_h, sigma_h_min, sigma_h_tilde })
    }
}

/// A `theta` that the analysis certifies for a given run, together with the
/// split parameter `s` and step size it was derived for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCertificate {
    pub theta: f64,
    pub s: f64,
    pub rho: f64,
    pub algorithm: Algorithm,
}

impl RateCertificate {
    /// Best certified `theta` for this problem/config pair, maximizing over
    /// the split parameter `s`.
    pub fn for_run(problem: &Problem, cfg: &SolverConfig) -> Result<RateCertificate, CertificateError> {
        let bounds = SpectralBounds::compute(problem, cfg)?;
        let gamma = problem.gamma_phi();
        let lambda = problem.lambda_g();
        let (theta, s) = match cfg.algorithm {
            Algorithm::Standard => best_theta_admm(&bounds, gamma, lambda, cfg.rho),
            Algorithm::Linearized => best_theta_linadmm(&bounds, gamma, lambda, cfg.rho)?,
        };
        Ok(RateCertificate { theta, s, rho: cfg.rho, algorithm: cfg.algorithm })
    }
}

/// `num/den` with every zero denominator (including `0/0`) read as
/// "this term imposes no constraint".
fn ratio_or_inf(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Certified contraction parameter for the standard algorithm:
/// `min(gamma rho sigma_A^2/(gamma sigma_H + 1), s rho / sigma_Htilde,
/// (1-s) lambda / ((rho + sigma_Htilde) sigma_B^2 + (1-s) rho sigma_G))`.
/// `gamma` is the inverse smoothness of `phi`, `lambda` the strong-convexity
/// modulus of `g`.
pub fn theta_admm(b: &SpectralBounds, gamma: f64, lambda: f64, rho: f64, s: f64) -> f64 {
    debug_assert!(rho > 0.0 && (0.0..1.0).contains(&s));
    let t1 = gamma * rho * b.sigma_a * b.sigma_a / (gamma * b.sigma_h + 1.0);
    let t2 = ratio_or_inf(s * rho, b.sigma_h_tilde);
    let t3 = ratio_or_inf(
        (1.0 - s) * lambda,
        (rho + b.sigma_h_tilde) * b.sigma_b * b.sigma_b + (1.0 - s) * rho * b.sigma_g,
    );
    t1.min(t2).min(t3)
}

/// Certified contraction parameter for the linearized algorithm:
/// `min(rho sigma_A^2/sigma_Hmin, s rho / sigma_Htilde, (1-s) lambda /
/// ((rho + sigma_Htilde) sigma_B^2 + (1-s) rho sigma_G))`. Requires the
/// preconditioner to cover the curvature of `phi`: `sigma_Hmin >= 1/gamma`.
pub fn theta_linadmm(
    b: &SpectralBounds,
    gamma: f64,
    lambda: f64,
    rho: f64,
    s: f64,
) -> Result<f64, CertificateError> {
    debug_assert!(rho > 0.0 && (0.0..1.0).contains(&s));
    if !(gamma > 0.0) || b.sigma_h_min * gamma < 1.0 - 1e-12 {
        return Err(CertificateError::Precondition {
            what: format!(
                "linearized rate needs min-eig(H) >= 1/gamma (min-eig {:e}, 1/gamma {:e})",
                b.sigma_h_min,
                if gamma > 0.0 { 1.0 / gamma } else { f64::INFINITY }
            ),
        });
    }
    let t1 = ratio_or_inf(rho * b.sigma_a * b.sigma_a, b.sigma_h_min);
    let t2 = ratio_or_inf(s * rho, b.sigma_h_tilde);
    let t3 = ratio_or_inf(
        (1.0 - s) * lambda,
        (rho + b.sigma_h_tilde) * b.sigma_b * b.sigma_b + (1.0 - s) * rho * b.sigma_g,
    );
    Ok(t1.min(t2).min(t3))
}

fn s_grid() -> impl Iterator<Item = f64> {
    (1..=19).map(|k| 0.05 * k as f64)
}

/// Maximize [`theta_admm`] over the split parameter: `s = 0` when the
/// second term is inactive (`sigma_Htilde = 0`), else a sweep of
/// `s in {0.05, 0.10, ..., 0.95}`. Returns `(theta, s)`.
pub fn best_theta_admm(b: &SpectralBounds, gamma: f64, lambda: f64, rho: f64) -> (f64, f64) {
    if b.sigma_h_tilde == 0.0 {
        return (theta_admm(b, gamma, lambda, rho, 0.0), 0.0);
    }
    let mut best = (f64::NEG_INFINITY, 0.05);
    for s in s_grid() {
        let theta = theta_admm(b, gamma, lambda, rho, s);
        if theta > best.0 {
            best = (theta, s);
        }
    }
    best
}

/// [`theta_linadmm`] counterpart of [`best_theta_admm`].
pub fn best_theta_linadmm(
    b: &SpectralBounds,
    gamma: f64,
    lambda: f64,
    rho: f64,
) -> Result<(f64, f64), CertificateError> {
    if b.sigma_h_tilde == 0.0 {
        return Ok((theta_linadmm(b, gamma, lambda, rho, 0.0)?, 0.0));
    }
    let mut best = (f64::NEG_INFINITY, 0.05);
    for s in s_grid() {
        let theta = theta_linadmm(b, gamma, lambda, rho, s)?;
        if theta > best.0 {
            best = (theta, s);
        }
    }
    Ok(best)
}

/// Step size maximizing the certified `theta` in the unpreconditioned
/// (`H = 0`) standard case, together with that optimal `theta`:
/// `rho* = sqrt(lambda/gamma) / (sigma_A sqrt(sigma_B^2 + sigma_G))`,
/// `theta* = sigma_A sqrt(gamma lambda / (sigma_B^2 + sigma_G))`.
///
/// At `rho*` the two active terms of the bound cross: `theta* = gamma rho*
/// sigma_A^2 = lambda / (rho* (sigma_B^2 + sigma_G))`.
pub fn optimal_rho_theta_admm(sigma_a: f64, sigma_b: f64, sigma_g: f64, lambda: f64, gamma: f64) -> (f64, f64) {
    assert!(
        sigma_a > 0.0 && lambda > 0.0 && gamma > 0.0 && sigma_g >= 0.0,
        "optimal step size needs sigma_A, lambda, gamma > 0 and sigma_G >= 0"
    );
    let coupling = sigma_b * sigma_b + sigma_g;
    assert!(coupling > 0.0, "optimal step size needs sigma_B^2 + sigma_G > 0");
    let rho = (lambda / gamma).sqrt() / (sigma_a * coupling.sqrt());
    let theta = sigma_a * (gamma * lambda / coupling).sqrt();
    (rho, theta)
}

/// One trajectory entry's certificate quantities against a fixed reference
/// pair. The `t = 0` row carries `(0, 0, delta_0)`: gaps are defined only
/// for actual steps, the distance also for the start point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateRow {
    pub t: usize,
    pub r: f64,
    pub r_star: f64,
    pub delta: f64,
}

/// Evaluate `(r_t, r*_t, delta_t)` for every iterate against the reference
/// pair `(alpha, v)`, with the reference primal point recovered as
/// `w = grad phi*(-A^T alpha)`.
///
/// `delta_t = (rho/2)|A w^t - B v - c|^2 + (1/2)|A w^t - B v - c|^2_Htilde
/// + (rho(1+theta)/2)|v^t - v|^2_G + ((1+theta)/(2 rho))|alpha - alpha^t|^2`.
///
/// For linearized runs the primal gap `r_t` evaluates `phi` at `w^{t-1}`
/// instead of `w^t` (the gradient step lags one iterate); the dual gap and
/// the distance keep one shared form.
pub fn certificate_rows(
    traj: &Trajectory,
    problem: &Problem,
    cfg: &SolverConfig,
    reference_alpha: &Vector,
    reference_v: &Vector,
    theta: f64,
) -> Result<Vec<CertificateRow>, CertificateError> {
    if traj.is_empty() {
        return Err(CertificateError::Precondition { what: "empty trajectory".into() });
    }
    if !(theta >= 0.0) {
        return Err(CertificateError::Precondition { what: format!("theta must be >= 0 (got {theta})") });
    }
    let rho = cfg.rho;
    let at = problem.a.transpose();
    let beta_ref = at.matvec(reference_alpha).scale(-1.0);
    let w_ref = functions::conjugate_gradient(&problem.phi, &beta_ref)?;
    let phi_ref = problem.phi.value(&w_ref);
    let conj_ref = beta_ref.dot(&w_ref) - phi_ref;
    let g_ref = problem.g.value(reference_v);
    let res_ref = problem.constraint_residual(&w_ref, reference_v);
    let bv_ref_plus_c = problem.b.matvec(reference_v).add(&problem.c);

    let mut rows = Vec::with_capacity(traj.len());
    for (idx, it) in traj.iterates.iter().enumerate() {
        let d = problem.a.matvec(&it.w).sub(&bv_ref_plus_c);
        let delta = 0.5 * rho * d.norm_sq()
            + 0.5 * weighted_norm_sq(&d, &cfg.h_tilde)?
            + 0.5 * rho * (1.0 + theta) * weighted_norm_sq(&it.v.sub(reference_v), &cfg.g_precond)?
            + (1.0 + theta) / (2.0 * rho) * reference_alpha.sub(&it.alpha).norm_sq();
        debug_assert!(delta >= 0.0);
        if idx == 0 {
            rows.push(CertificateRow { t: it.t, r: 0.0, r_star: 0.0, delta });
            continue;
        }
        let w_gap = match cfg.algorithm {
            Algorithm::Standard => &it.w,
            Algorithm::Linearized => &traj.iterates[idx - 1].w,
        };
        let r = problem.phi.value(w_gap) + problem.g.value(&it.v) - phi_ref - g_ref
            - it.alpha_tilde.dot(&res_ref)
            + reference_alpha.dot(&problem.constraint_residual(w_gap, &it.v));
        let beta_t = at.matvec(&it.alpha_tilde).scale(-1.0);
        let r_star = functions::conjugate_value(&problem.phi, &beta_t)? + problem.g.value(&it.v)
            - conj_ref
            - g_ref
            + it.alpha_tilde.dot(&bv_ref_plus_c)
            - reference_alpha.dot(&problem.b.matvec(&it.v).add(&problem.c));
        rows.push(CertificateRow { t: it.t, r, r_star, delta });
    }
    Ok(rows)
}

/// Which of the four checked inequality families a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckFamily {
    PerStepPrimal,
    PerStepDual,
    WeightedPrimal,
    WeightedDual,
    BregmanSum,
}

impl fmt::Display for CheckFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CheckFamily::PerStepPrimal => "per-step primal",
            CheckFamily::PerStepDual => "per-step dual",
            CheckFamily::WeightedPrimal => "weighted-sum primal",
            CheckFamily::WeightedDual => "weighted-sum dual",
            CheckFamily::BregmanSum => "Bregman sum",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub family: CheckFamily,
    pub slack: f64,
}

/// Outcome of a family of inequality checks. `worst_slack` is the smallest
/// `bound - value` seen (negative means the bound was exceeded);
/// a check passes while `worst_slack >= -tolerance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    pub pass: bool,
    pub worst_slack: f64,
    pub first_violation: Option<Violation>,
    pub checks: usize,
    pub tolerance: f64,
}

struct SlackTracker {
    worst: f64,
    first: Option<Violation>,
    checks: usize,
    tol: f64,
}

impl SlackTracker {
    fn new(scale: f64) -> SlackTracker {
        SlackTracker { worst: f64::INFINITY, first: None, checks: 0, tol: SLACK_TOL * (1.0 + scale.abs()) }
    }

    fn record(&mut self, index: usize, family: CheckFamily, slack: f64) {
        self.checks += 1;
        if slack < self.worst {
            self.worst = slack;
        }
        if slack < -self.tol && self.first.is_none() {
            self.first = Some(Violation { index, family, slack });
        }
    }

    fn report(self) -> CheckReport {
        CheckReport {
            pass: self.first.is_none(),
            worst_slack: if self.checks == 0 { 0.0 } else { self.worst },
            first_violation: self.first,
            checks: self.checks,
            tolerance: self.tol,
        }
    }
}

/// Verify, for every step `t` and every horizon `T`, the four gap
/// inequalities promised for a feasible `theta`:
/// per-step `r_t <= (1+theta)^{-1} delta_{t-1} - delta_t` (same for `r*_t`)
/// and the telescoped weighted sums
/// `sum_{t=1}^T (1+theta)^{t-T} r_t <= (1+theta)^{-T} delta_0 - delta_T`.
/// Violations beyond round-off are reported, never thrown.
pub fn check_certificates(rows: &[CertificateRow], theta: f64) -> CheckReport {
    let delta0 = rows.first().map_or(0.0, |r| r.delta);
    let mut tracker = SlackTracker::new(delta0);
    let shrink = 1.0 / (1.0 + theta);
    // weighted running sums: S_T = S_{T-1}/(1+theta) + r_T, pow_T = (1+theta)^{-T}
    let mut sum_r = 0.0;
    let mut sum_r_star = 0.0;
    let mut pow = 1.0;
    for t in 1..rows.len() {
        let (prev, cur) = (&rows[t - 1], &rows[t]);
        let per_step_bound = shrink * prev.delta - cur.delta;
        tracker.record(t, CheckFamily::PerStepPrimal, per_step_bound - cur.r);
        tracker.record(t, CheckFamily::PerStepDual, per_step_bound - cur.r_star);
        sum_r = shrink * sum_r + cur.r;
        sum_r_star = shrink * sum_r_star + cur.r_star;
        pow *= shrink;
        let weighted_bound = pow * delta0 - cur.delta;
        tracker.record(t, CheckFamily::WeightedPrimal, weighted_bound - sum_r);
        tracker.record(t, CheckFamily::WeightedDual, weighted_bound - sum_r_star);
    }
    tracker.report()
}

/// Verify the summed Bregman-divergence convergence bound against the known
/// optimum: for every horizon `T`,
/// `sum_{t=1}^T (1+theta)^{t-T} [max(D_phi, D_phi*) + D_g] + terminal_T
/// <= (1+theta)^{-T} / 2 * initial_bracket`,
/// where the divergences are anchored at the optimum and the terminal /
/// initial weights follow the algorithm-specific analysis (the linearized
/// form measures `w^T - w*` through `H` and buys its start-point bound with
/// `rho + sigma_Htilde`).
pub fn corollary_bregman_check(
    traj: &Trajectory,
    problem: &Problem,
    cfg: &SolverConfig,
    theta: f64,
) -> Result<CheckReport, CertificateError> {
    if traj.is_empty() {
        return Err(CertificateError::Precondition { what: "empty trajectory".into() });
    }
    if !(theta >= 0.0) {
        return Err(CertificateError::Precondition { what: format!("theta must be >= 0 (got {theta})") });
    }
    let opt = problem
        .optimum
        .as_ref()
        .ok_or(CertificateError::Precondition { what: "Bregman check needs a known optimum".into() })?
        .clone();
    let rho = cfg.rho;
    let at = problem.a.transpose();
    let beta_star = at.matvec(&opt.alpha).scale(-1.0);
    // anchor quantities of the conjugate divergence, computed once
    let grad_conj_star = functions::conjugate_gradient(&problem.phi, &beta_star)?;
    let conj_star = beta_star.dot(&grad_conj_star) - problem.phi.value(&grad_conj_star);
    let sigma_h_tilde = if cfg.h_tilde.is_zero() {
        0.0
    } else {
        cfg.h_tilde.extreme_eigenvalues_symmetric()?.1.max(0.0)
    };

    let start = &traj.iterates[0];
    let a_w0_err = problem.a.matvec(&start.w.sub(&opt.w));
    let bracket = match cfg.algorithm {
        Algorithm::Standard => {
            rho * a_w0_err.norm_sq()
                + weighted_norm_sq(&a_w0_err, &cfg.h_tilde)?
                + (1.0 + theta) / rho * start.alpha.sub(&opt.alpha).norm_sq()
                + rho * (1.0 + theta) * weighted_norm_sq(&start.v.sub(&opt.v), &cfg.g_precond)?
        }
        Algorithm::Linearized => {
            (rho + sigma_h_tilde) * a_w0_err.norm_sq()
                + (1.0 + theta) / rho * start.alpha.sub(&opt.alpha).norm_sq()
                + rho * (1.0 + theta) * weighted_norm_sq(&start.v.sub(&opt.v), &cfg.g_precond)?
        }
    };

    let mut tracker = SlackTracker::new(0.5 * bracket);
    let shrink = 1.0 / (1.0 + theta);
    let mut sum = 0.0;
    let mut pow = 1.0;
    for (idx, it) in traj.iterates.iter().enumerate() {
        if idx > 0 {
            let w_gap = match cfg.algorithm {
                Algorithm::Standard => &it.w,
                Algorithm::Linearized => &traj.iterates[idx - 1].w,
            };
            let d_phi = functions::bregman(&problem.phi, &opt.w, w_gap);
            let beta_t = at.matvec(&it.alpha_tilde).scale(-1.0);
            let d_conj = functions::conjugate_value(&problem.phi, &beta_t)?
                - conj_star
                - grad_conj_star.dot(&beta_t.sub(&beta_star));
            let d_g = functions::bregman(&problem.g, &opt.v, &it.v);
            sum = shrink * sum + d_phi.max(d_conj) + d_g;
            pow *= shrink;
        }
        let a_w_err = problem.a.matvec(&it.w.sub(&opt.w));
        let terminal = match cfg.algorithm {
            Algorithm::Standard => {
                0.5 * rho * a_w_err.norm_sq() + 0.5 * weighted_norm_sq(&a_w_err, &cfg.h_tilde)?
            }
            Algorithm::Linearized => {
                0.5 * rho * a_w_err.norm_sq() + 0.5 * weighted_norm_sq(&it.w.sub(&opt.w), &cfg.h_precond)?
            }
        } + (1.0 + theta) / (2.0 * rho) * it.alpha.sub(&opt.alpha).norm_sq()
            + 0.5 * rho * (1.0 + theta) * weighted_norm_sq(&it.v.sub(&opt.v), &cfg.g_precond)?;
        tracker.record(idx, CheckFamily::BregmanSum, pow * 0.5 * bracket - terminal - sum);
    }
    Ok(tracker.report())
}

/// Weighted averages `vbar = sum (1+theta)^t v^t / sum (1+theta)^t` over the
/// steps `t = 1..T` (and the same for `alphabar` built from the certificate
/// multipliers `alphatilde^t`). Evaluated with the shifted weights
/// `(1+theta)^{t-T}` so no power overflows for long runs.
pub fn weighted_average_iterates(traj: &Trajectory, theta: f64) -> Result<(Vector, Vector), CertificateError> {
    if traj.len() < 2 {
        return Err(CertificateError::Precondition { what: "averaging needs at least one step".into() });
    }
    if !(theta >= 0.0) {
        return Err(CertificateError::Precondition { what: format!("theta must be >= 0 (got {theta})") });
    }
    let shrink = 1.0 / (1.0 + theta);
    let mut v_sum = Vector::zeros(traj.iterates[0].v.len());
    let mut alpha_sum = Vector::zeros(traj.iterates[0].alpha.len());
    let mut weight_sum = 0.0;
    for it in traj.iterates.iter().skip(1) {
        v_sum = v_sum.scale(shrink).add(&it.v);
        alpha_sum = alpha_sum.scale(shrink).add(&it.alpha_tilde);
        weight_sum = shrink * weight_sum + 1.0;
    }
    Ok((v_sum.scale(1.0 / weight_sum), alpha_sum.scale(1.0 / weight_sum)))
}

/// Strong-convexity surrogate for a merely convex `g`: replace `g` by
/// `g + (epsilon/2)|v|^2` and run for `T = ceil(ln(1/(gamma epsilon)) /
/// sqrt(gamma epsilon))` steps to reach accuracy `O(epsilon)`.
/// Returns `(epsilon, T)`.
pub fn smoothing_schedule(gamma: f64, epsilon: f64) -> Result<(f64, usize), CertificateError> {
    if !(gamma > 0.0 && epsilon > 0.0) {
        return Err(CertificateError::Precondition { what: "gamma and epsilon must be > 0".into() });
    }
    let product = gamma * epsilon;
    if !(product < 1.0) {
        return Err(CertificateError::Precondition {
            what: format!("gamma * epsilon must be < 1 (got {product})"),
        });
    }
    let t = ((1.0 / product).ln() / product.sqrt()).ceil();
    Ok((epsilon, t as usize))
}

/// Estimate the asymptotic per-step error contraction factor of a run.
///
/// Measurement window: entries with `e_t in [1e-10, e_0 * 1e-2]` — late
/// enough that transients have died, early enough that round-off has not
/// taken over. The estimate is the geometric mean of the successive ratios
/// `e_{t+1}/e_t` started inside the window; when fewer than 5 ratios
/// qualify it falls back to the least-squares slope of `ln e_t` over the
/// window points.
pub fn estimate_rate(errors: &[f64]) -> Result<f64, CertificateError> {
    if errors.len() < 10 {
        return Err(CertificateError::Precondition {
            what: format!("rate estimation needs >= 10 entries (got {})", errors.len()),
        });
    }
    let ceiling = errors[0] * RATE_DROP;
    let in_window = |e: f64| (RATE_FLOOR..=ceiling).contains(&e);
    let mut log_ratio_sum = 0.0;
    let mut ratios = 0usize;
    for t in 0..errors.len() - 1 {
        if in_window(errors[t]) {
            log_ratio_sum += (errors[t + 1] / errors[t]).ln();
            ratios += 1;
        }
    }
    if ratios >= 5 {
        return Ok((log_ratio_sum / ratios as f64).exp());
    }
    // least-squares slope of ln e_t over the window points
    let points: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .filter(|(_, &e)| in_window(e))
        .map(|(t, &e)| (t as f64, e.ln()))
        .collect();
    if points.len() < 2 {
        return Err(CertificateError::DegenerateTrajectory {
            what: format!(
                "only {} error entries fall in the measurement window [{RATE_FLOOR:e}, {ceiling:e}]",
                points.len()
            ),
        });
    }
    let n = points.len() as f64;
    let (mut st, mut se, mut stt, mut ste) = (0.0, 0.0, 0.0, 0.0);
    for &(t, le) in &points {
        st += t;
        se += le;
        stt += t * t;
        ste += t * le;
    }
    let slope = (n * ste - st * se) / (n * stt - st * st);
    Ok(slope.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::solvers::{self, Iterate, StartPoint};
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn bounds(a: f64, b: f64, g: f64, h: f64, h_min: f64, h_tilde: f64) -> SpectralBounds {
        SpectralBounds { sigma_a: a, sigma_b: b, sigma_g: g, sigma_h: h, sigma_h_min: h_min, sigma_h_tilde: h_tilde }
    }

    fn quad11() -> Problem {
        Problem::quadratic_diagonal(&[1.0], &[1.0]).unwrap()
    }

    fn paper1d() -> Problem {
        Problem::arctan_quartic(0.1, 0.2, 0.2).unwrap()
    }

    fn ones_start() -> StartPoint {
        StartPoint {
            w: Vector::from_slice(&[1.0]),
            v: Vector::from_slice(&[1.0]),
            alpha: Vector::from_slice(&[0.0]),
        }
    }

    #[test]
    fn theta_admm_examples() {
        let b0 = bounds(1.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        assert_close(theta_admm(&b0, 1.0, 1.0, 1.0, 0.0), 1.0, 1e-15);
        assert_close(theta_admm(&b0, 0.1, 0.2, 2.0f64.sqrt(), 0.0), 0.02f64.sqrt(), 1e-15);
        // s -> 0 with a live H_tilde forces theta to 0 through the second term
        let bh = bounds(1.0, 1.0, 0.0, 2.0, 2.0, 2.0);
        assert_close(theta_admm(&bh, 1.0, 1.0, 1.0, 0.0), 0.0, 0.0);
    }

    #[test]
    fn theta_linadmm_examples() {
        let b = bounds(1.0, 1.0, 0.0, 2.0, 2.0, 2.0);
        assert_close(theta_linadmm(&b, 1.0, 1.0, 1.0, 0.5).unwrap(), 1.0 / 6.0, 1e-15);
        // rho -> infinity drives theta to 0 through the coupling term
        let (theta, _) = best_theta_linadmm(&b, 1.0, 1.0, 1e6).unwrap();
        assert!(theta < 1e-5, "theta {theta}");
        // s = 0 with H_tilde > 0 pins theta at 0
        assert_close(theta_linadmm(&b, 1.0, 1.0, 1.0, 0.0).unwrap(), 0.0, 0.0);
        // preconditioner below the curvature is rejected
        let weak = bounds(1.0, 1.0, 0.0, 0.5, 0.5, 0.5);
        assert!(matches!(
            theta_linadmm(&weak, 1.0, 1.0, 1.0, 0.5),
            Err(CertificateError::Precondition { .. })
        ));
    }

    #[test]
    fn theta_monotone_and_dominated_by_terms() {
        let cases = [
            (bounds(1.0, 1.0, 0.0, 0.0, 0.0, 0.0), 1.0, 1.0, 1.0, 0.0),
            (bounds(0.7, 1.3, 0.4, 2.0, 1.5, 1.8), 0.5, 0.9, 1.7, 0.35),
            (bounds(2.0, 0.5, 1.0, 3.0, 2.5, 2.0), 0.4, 2.0, 0.6, 0.6),
        ];
        for (b, gamma, lambda, rho, s) in cases {
            let theta = theta_admm(&b, gamma, lambda, rho, s);
            let t1 = gamma * rho * b.sigma_a * b.sigma_a / (gamma * b.sigma_h + 1.0);
            assert!(theta <= t1 + 1e-15);
            for (db, dg, dh) in [(0.5, 0.0, 0.0), (0.0, 0.5, 0.0), (0.0, 0.0, 0.5)] {
                let worse = bounds(b.sigma_a, b.sigma_b + db, b.sigma_g + dg, b.sigma_h, b.sigma_h_min, b.sigma_h_tilde + dh);
                assert!(theta_admm(&worse, gamma, lambda, rho, s) <= theta + 1e-15);
            }
        }
    }

    #[test]
    fn optimal_rho_theta_values() {
        let (rho, theta) = optimal_rho_theta_admm(1.0, 1.0, 0.0, 1.0, 1.0);
        assert_close(rho, 1.0, 1e-15);
        assert_close(theta, 1.0, 1e-15);
        let (rho, theta) = optimal_rho_theta_admm(1.0, 1.0, 0.0, 0.2, 0.1);
        assert_close(rho, 2.0f64.sqrt(), 1e-15);
        assert_close(theta, 0.02f64.sqrt(), 1e-15);
        // coupled v-block (sigma_G = 3): the crossing point moves down, not up
        let (rho, theta) = optimal_rho_theta_admm(1.0, 1.0, 3.0, 1.0, 1.0);
        assert_close(rho, 0.5, 1e-15);
        assert_close(theta, 0.5, 1e-15);
    }

    #[test]
    fn optimal_rho_is_self_consistent_and_grid_dominant() {
        for (sa, sb, sg, lambda, gamma) in
            [(1.0, 1.0, 0.0, 1.0, 1.0), (1.0, 1.0, 0.0, 0.2, 0.1), (1.0, 1.0, 3.0, 1.0, 1.0), (0.6, 1.4, 0.7, 0.9, 0.3)]
        {
            let (rho_star, theta_star) = optimal_rho_theta_admm(sa, sb, sg, lambda, gamma);
            let b = bounds(sa, sb, sg, 0.0, 0.0, 0.0);
            assert_close(theta_admm(&b, gamma, lambda, rho_star, 0.0), theta_star, 1e-12 * (1.0 + theta_star));
            for k in 0..100 {
                let rho = rho_star * 1e-2 * 1e4f64.powf(k as f64 / 99.0);
                assert!(
                    theta_admm(&b, gamma, lambda, rho, 0.0) <= theta_star * (1.0 + 1e-12),
                    "rho {rho} beats rho* {rho_star}"
                );
            }
        }
    }

    #[test]
    fn certificate_row_known_values() {
        let p = quad11();
        let cfg = SolverConfig::new(&p, Algorithm::Standard, 1.0, 1).unwrap();
        let traj = solvers::run(&p, &cfg, &ones_start()).unwrap();
        let zero = Vector::zeros(1);
        let rows = certificate_rows(&traj, &p, &cfg, &zero, &zero, 1.0).unwrap();
        assert_eq!(rows.len(), 2);
        assert_close(rows[0].r, 0.0, 0.0);
        assert_close(rows[0].delta, 0.5, 1e-14);
        assert_close(rows[1].r, 0.15625, 1e-13);
        assert_close(rows[1].r_star, 0.15625, 1e-13);
        assert_close(rows[1].delta, 0.09375, 1e-13);
        // the theta = 1 bound is tight here: r_1 = delta_0/2 - delta_1 exactly
        assert_close(rows[1].r, rows[0].delta / 2.0 - rows[1].delta, 1e-13);
    }

    #[test]
    fn frozen_at_optimum_rows_vanish() {
        for p in [quad11(), paper1d()] {
            let opt = p.optimum.clone().unwrap();
            let frozen = Trajectory {
                iterates: (0..3)
                    .map(|t| Iterate {
                        t,
                        w: opt.w.clone(),
                        v: opt.v.clone(),
                        alpha: opt.alpha.clone(),
                        alpha_tilde: opt.alpha.clone(),
                    })
                    .collect(),
            };
            let cfg = SolverConfig::new(&p, Algorithm::Standard, 1.0, 3).unwrap();
            let rows = certificate_rows(&frozen, &p, &cfg, &opt.alpha, &opt.v, 0.7).unwrap();
            for row in &rows {
                assert!(row.r.abs() < 1e-10 && row.r_star.abs() < 1e-10 && row.delta < 1e-10, "{row:?}");
            }
            let report = corollary_bregman_check(&frozen, &p, &cfg, 0.7).unwrap();
            assert!(report.pass);
        }
    }

    #[test]
    fn all_zero_rows_pass_with_zero_slack() {
        let rows: Vec<CertificateRow> =
            (0..5).map(|t| CertificateRow { t, r: 0.0, r_star: 0.0, delta: 0.0 }).collect();
        let report = check_certificates(&rows, 0.4);
        assert!(report.pass);
        assert_close(report.worst_slack, 0.0, 0.0);
        assert_eq!(report.checks, 16);
    }

    fn certified_run(p: &Problem, algo: Algorithm, rho: f64, h: Matrix, iters: usize) -> (Trajectory, SolverConfig, f64) {
        let g = Matrix::zeros(p.v_dim(), p.v_dim());
        let cfg = SolverConfig::build(p, algo, rho, g, h, iters, solvers::DEFAULT_INNER_TOL, false).unwrap();
        let traj = solvers::run(p, &cfg, &ones_start()).unwrap();
        let cert = RateCertificate::for_run(p, &cfg).unwrap();
        (traj, cfg, cert.theta)
    }

    #[test]
    fn certificates_hold_along_real_runs() {
        let cases: Vec<(Problem, Algorithm, f64, f64)> = vec![
            (quad11(), Algorithm::Standard, 1.0, 0.0),
            (quad11(), Algorithm::Standard, 0.3, 0.0),
            (quad11(), Algorithm::Linearized, 1.0, 2.0),
            (paper1d(), Algorithm::Standard, 1.0, 0.0),
            (paper1d(), Algorithm::Standard, 2.0f64.sqrt(), 0.0),
            (paper1d(), Algorithm::Linearized, 1.0, 20.4),
        ];
        for (p, algo, rho, h) in cases {
            let h_mat = if h == 0.0 { Matrix::zeros(1, 1) } else { Matrix::diag(&[h]) };
            let (traj, cfg, theta) = certified_run(&p, algo, rho, h_mat, 120);
            assert!(theta > 0.0, "{algo:?} rho={rho}");
            let opt = p.optimum.clone().unwrap();
            let rows = certificate_rows(&traj, &p, &cfg, &opt.alpha, &opt.v, theta).unwrap();
            let report = check_certificates(&rows, theta);
            assert!(
                report.pass,
                "{algo:?} rho={rho}: worst slack {:e} at {:?}",
                report.worst_slack, report.first_violation
            );
            let breg = corollary_bregman_check(&traj, &p, &cfg, theta).unwrap();
            assert!(breg.pass, "{algo:?} rho={rho}: Bregman worst slack {:e}", breg.worst_slack);
        }
    }

    #[test]
    fn inflated_theta_is_caught() {
        let p = quad11();
        let (traj, cfg, theta) = certified_run(&p, Algorithm::Standard, 1.0, Matrix::zeros(1, 1), 40);
        let opt = p.optimum.clone().unwrap();
        let inflated = 10.0 * theta;
        let rows = certificate_rows(&traj, &p, &cfg, &opt.alpha, &opt.v, inflated).unwrap();
        let report = check_certificates(&rows, inflated);
        assert!(!report.pass);
        let v = report.first_violation.unwrap();
        assert!(v.slack < -report.tolerance);
    }

    #[test]
    fn theta_zero_uses_unweighted_sums() {
        // theta = 0 turns every weight into 1; the same code path must pass
        for p in [quad11(), paper1d()] {
            let (traj, cfg, _) = certified_run(&p, Algorithm::Standard, 0.7, Matrix::zeros(1, 1), 80);
            let opt = p.optimum.clone().unwrap();
            let rows = certificate_rows(&traj, &p, &cfg, &opt.alpha, &opt.v, 0.0).unwrap();
            let report = check_certificates(&rows, 0.0);
            assert!(report.pass, "worst slack {:e}", report.worst_slack);
            let breg = corollary_bregman_check(&traj, &p, &cfg, 0.0).unwrap();
            assert!(breg.pass, "Bregman worst slack {:e}", breg.worst_slack);
        }
    }

    #[test]
    fn weighted_averages() {
        let mk = |vals: &[f64]| Trajectory {
            iterates: std::iter::once(0.0)
                .chain(vals.iter().copied())
                .enumerate()
                .map(|(t, x)| Iterate {
                    t,
                    w: Vector::from_slice(&[0.0]),
                    v: Vector::from_slice(&[x]),
                    alpha: Vector::from_slice(&[2.0 * x]),
                    alpha_tilde: Vector::from_slice(&[2.0 * x]),
                })
                .collect(),
        };
        let (v_bar, a_bar) = weighted_average_iterates(&mk(&[1.0, 2.0]), 0.0).unwrap();
        assert_close(v_bar[0], 1.5, 1e-15);
        assert_close(a_bar[0], 3.0, 1e-15);
        let (v_bar, _) = weighted_average_iterates(&mk(&[1.0, 2.0]), 1.0).unwrap();
        assert_close(v_bar[0], 5.0 / 3.0, 1e-15);
        let (v_bar, _) = weighted_average_iterates(&mk(&[3.3, 3.3, 3.3]), 0.37).unwrap();
        assert_close(v_bar[0], 3.3, 1e-14);
        // long horizon: the shifted weights must not overflow
        let (v_bar, _) = weighted_average_iterates(&mk(&vec![1.0; 500]), 1.0).unwrap();
        assert_close(v_bar[0], 1.0, 1e-12);
        let empty = Trajectory {
            iterates: vec![Iterate {
                t: 0,
                w: Vector::zeros(1),
                v: Vector::zeros(1),
                alpha: Vector::zeros(1),
                alpha_tilde: Vector::zeros(1),
            }],
        };
        assert!(matches!(
            weighted_average_iterates(&empty, 0.5),
            Err(CertificateError::Precondition { .. })
        ));
    }

    #[test]
    fn smoothing_schedule_examples() {
        let (eps, t) = smoothing_schedule(1.0, 0.01).unwrap();
        assert_close(eps, 0.01, 0.0);
        assert_eq!(t, 47);
        let (_, t) = smoothing_schedule(0.1, 0.1).unwrap();
        assert_eq!(t, 47);
        let (_, t) = smoothing_schedule(0.99, 1.0).unwrap();
        assert!(t >= 1);
        assert!(matches!(smoothing_schedule(1.0, 1.0), Err(CertificateError::Precondition { .. })));
        assert!(matches!(smoothing_schedule(2.0, 0.6), Err(CertificateError::Precondition { .. })));
    }

    #[test]
    fn estimate_rate_examples() {
        let geo: Vec<f64> = (0..40).map(|t| 0.5f64.powi(t)).collect();
        assert_close(estimate_rate(&geo).unwrap(), 0.5, 1e-12);
        let scaled: Vec<f64> = (0..40).map(|t| 7.0 * 0.21f64.powi(t)).collect();
        assert_close(estimate_rate(&scaled).unwrap(), 0.21, 1e-12);
    }

    #[test]
    fn estimate_rate_fallback_and_degenerate() {
        // only 4 window ratios -> least-squares fallback over the window
        let steep: Vec<f64> = vec![1.0, 1e-3, 1e-5, 1e-7, 1e-9, 1e-11, 1e-13, 1e-15, 1e-16, 1e-17];
        assert_close(estimate_rate(&steep).unwrap(), 1e-2, 1e-12);
        // everything below the floor
        assert!(matches!(
            estimate_rate(&[1e-12; 10]),
            Err(CertificateError::DegenerateTrajectory { .. })
        ));
        // never decays into the window
        assert!(matches!(
            estimate_rate(&[1.0; 10]),
            Err(CertificateError::DegenerateTrajectory { .. })
        ));
        assert!(matches!(estimate_rate(&[1.0; 9]), Err(CertificateError::Precondition { .. })));
    }

    #[test]
    fn estimate_rate_on_solver_run() {
        let p = paper1d();
        let cfg = SolverConfig::new(&p, Algorithm::Standard, 2.0f64.sqrt(), 400).unwrap();
        let traj = solvers::run(&p, &cfg, &ones_start()).unwrap();
        let errs = traj.error_history(&p).unwrap();
        let rate = estimate_rate(&errs).unwrap();
        assert!((rate - 0.21).abs() <= 0.05, "measured rate {rate}");
    }

    proptest! {
        #[test]
        fn estimate_rate_scale_invariant(rate in 0.05f64..0.95, scale in 0.1f64..10.0) {
            let errs: Vec<f64> = (0..150).map(|t| scale * rate.powi(t)).collect();
            let est = estimate_rate(&errs).unwrap();
            prop_assert!((est - rate).abs() <= 1e-9 * rate, "est {est} vs {rate}");
        }

        #[test]
        fn theta_never_exceeds_any_term(
            sa in 0.1f64..3.0, sb in 0.1f64..3.0, sg in 0.0f64..3.0,
            sh in 0.0f64..3.0, sht in 0.0f64..3.0,
            gamma in 0.05f64..2.0, lambda in 0.05f64..2.0,
            rho in 0.1f64..5.0, s in 0.0f64..0.95,
        ) {
            let b = bounds(sa, sb, sg, sh, sh, sht);
            let theta = theta_admm(&b, gamma, lambda, rho, s);
            let t1 = gamma * rho * sa * sa / (gamma * sh + 1.0);
            let t3_den = (rho + sht) * sb * sb + (1.0 - s) * rho * sg;
            prop_assert!(theta <= t1 + 1e-15);
            prop_assert!(theta <= (1.0 - s) * lambda / t3_den + 1e-15);
        }

        #[test]
        fn averages_match_arithmetic_mean_at_theta_zero(vals in proptest::collection::vec(-5.0f64..5.0, 1..30)) {
            let traj = Trajectory {
                iterates: std::iter::once(0.0)
                    .chain(vals.iter().copied())
                    .enumerate()
                    .map(|(t, x)| Iterate {
                        t,
                        w: Vector::from_slice(&[0.0]),
                        v: Vector::from_slice(&[x]),
                        alpha: Vector::from_slice(&[x]),
                        alpha_tilde: Vector::from_slice(&[x]),
                    })
                    .collect(),
            };
            let (v_bar, _) = weighted_average_iterates(&traj, 0.0).unwrap();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            prop_assert!((v_bar[0] - mean).abs() <= 1e-14 * (1.0 + mean.abs()));
        }
    }
}

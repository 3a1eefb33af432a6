//! Separable convex functions: values, gradients, curvature moduli, the
//! strongly-convex subproblem solver, convex conjugates, and Bregman
//! divergences.
//!
//! All instances are coordinatewise-separable with strictly increasing scalar
//! gradients, so every nonlinear solve in the crate reduces to safeguarded
//! scalar Newton on a monotone function.

use crate::linalg::{LinalgError, Matrix, Vector};
use std::fmt;

/// Residual tolerance for the scalar Newton solves (scaled by input magnitude).
pub const NEWTON_TOL: f64 = 1e-12;
/// Newton/bisection iteration cap.
const NEWTON_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionError {
    InvalidParameter { what: String },
    OutOfDomain { coord: usize, beta: f64 },
    NoConvergence { coord: usize, residual: f64 },
    Unsupported { what: String },
    Linalg(LinalgError),
}

impl fmt::Display for FunctionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionError::InvalidParameter { what } => write!(f, "invalid parameter: {what}"),
            FunctionError::OutOfDomain { coord, beta } => {
                write!(f, "conjugate argument {beta:e} at coordinate {coord} lies outside the gradient range")
            }
            FunctionError::NoConvergence { coord, residual } => {
                write!(f, "scalar solve failed to converge at coordinate {coord} (residual {residual:e})")
            }
            FunctionError::Unsupported { what } => write!(f, "unsupported configuration: {what}"),
            FunctionError::Linalg(e) => write!(f, "linear algebra failure: {e}"),
        }
    }
}

impl std::error::Error for FunctionError {}

impl From<LinalgError> for FunctionError {
    fn from(e: LinalgError) -> Self {
        FunctionError::Linalg(e)
    }
}

/// A separable convex function together with its analytic derivatives and
/// curvature moduli.
///
/// * `DiagonalQuadratic` — `(1/2) sum d_i u_i^2` with `d_i >= 0`.
/// * `ArctanSmooth` — the scalar `(w/sqrt(gamma)) arctan(w/sqrt(gamma))
///   - (1/2) ln(1 + w^2/gamma) + (mu/2) w^2`: smooth with constant
///   `1/gamma + mu`, strongly convex with constant `mu`.
/// * `QuarticStrong` — the scalar `v^4/12 + (lambda/2) v^2`: strongly convex,
///   curvature unbounded (smoothness reported as infinity).
/// * `Tikhonov` — a base function plus `epsilon * u^T u`, raising strong
///   convexity by `2 epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub enum SeparableFunction {
    DiagonalQuadratic { diag: Vec<f64> },
    ArctanSmooth { gamma: f64, mu: f64 },
    QuarticStrong { lambda: f64 },
    Tikhonov { base: Box<SeparableFunction>, epsilon: f64 },
}

impl SeparableFunction {
    pub fn diagonal_quadratic(diag: &[f64]) -> Result<Self, FunctionError> {
        if diag.is_empty() {
            return Err(FunctionError::InvalidParameter { what: "quadratic diagonal is empty".into() });
        }
        if diag.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(FunctionError::InvalidParameter {
                what: "quadratic diagonal entries must be finite and nonnegative".into(),
            });
        }
        Ok(SeparableFunction::DiagonalQuadratic { diag: diag.to_vec() })
    }

    pub fn arctan_smooth(gamma: f64, mu: f64) -> Result<Self, FunctionError> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(FunctionError::InvalidParameter { what: "gamma must be finite and > 0".into() });
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(FunctionError::InvalidParameter { what: "mu must be finite and >= 0".into() });
        }
        Ok(SeparableFunction::ArctanSmooth { gamma, mu })
    }

    pub fn quartic_strong(lambda: f64) -> Result<Self, FunctionError> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(FunctionError::InvalidParameter { what: "lambda must be finite and >= 0".into() });
        }
        Ok(SeparableFunction::QuarticStrong { lambda })
    }

    pub fn tikhonov(base: SeparableFunction, epsilon: f64) -> Result<Self, FunctionError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(FunctionError::InvalidParameter { what: "epsilon must be finite and > 0".into() });
        }
        Ok(SeparableFunction::Tikhonov { base: Box::new(base), epsilon })
    }

    pub fn dimension(&self) -> usize {
        match self {
            SeparableFunction::DiagonalQuadratic { diag } => diag.len(),
            SeparableFunction::ArctanSmooth { .. } | SeparableFunction::QuarticStrong { .. } => 1,
            SeparableFunction::Tikhonov { base, .. } => base.dimension(),
        }
    }

    pub fn coord_value(&self, i: usize, x: f64) -> f64 {
        match self {
            SeparableFunction::DiagonalQuadratic { diag } => 0.5 * diag[i] * x * x,
            SeparableFunction::ArctanSmooth { gamma, mu } => {
                let s = gamma.sqrt();
                (x / s) * (x / s).atan() - 0.5 * (1.0 + x * x / gamma).ln() + 0.5 * mu * x * x
            }
            SeparableFunction::QuarticStrong { lambda } => x * x * x * x / 12.0 + 0.5 * lambda * x * x,
            SeparableFunction::Tikhonov { base, epsilon } => base.coord_value(i, x) + epsilon * x * x,
        }
    }

    pub fn coord_gradient(&self, i: usize, x: f64) -> f64 {
        match self {
            SeparableFunction::DiagonalQuadratic { diag } => diag[i] * x,
            SeparableFunction::ArctanSmooth { gamma, mu } => {
                let s = gamma.sqrt();
                (x / s).atan() / s + mu * x
            }
            SeparableFunction::QuarticStrong { lambda } => x * x * x / 3.0 + lambda * x,
            SeparableFunction::Tikhonov { base, epsilon } => base.coord_gradient(i, x) + 2.0 * epsilon * x,
        }
    }

    pub fn coord_curvature(&self, i: usize, x: f64) -> f64 {
        match self {
            SeparableFunction::DiagonalQuadratic { diag } => diag[i],
            SeparableFunction::ArctanSmooth { gamma, mu } => (1.0 / gamma) / (1.0 + x * x / gamma) + mu,
            SeparableFunction::QuarticStrong { lambda } => x * x + lambda,
            SeparableFunction::Tikhonov { base, epsilon } => base.coord_curvature(i, x) + 2.0 * epsilon,
        }
    }

    /// Open range of the scalar gradient on coordinate `i`, as `(lo, hi)`.
    ///
    /// The conjugate is defined exactly for arguments strictly inside this
    /// range (plus the degenerate `{0}` case of a zero quadratic coordinate,
    /// handled by the conjugate fast path).
    pub fn coord_gradient_range(&self, i: usize) -> (f64, f64) {
        match self {
            SeparableFunction::DiagonalQuadratic { diag } => {
                if diag[i] > 0.0 {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    (0.0, 0.0)
                }
            }
            SeparableFunction::ArctanSmooth { gamma, mu } => {
                if *mu > 0.0 {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    let bound = std::f64::consts::FRAC_PI_2 / gamma.sqrt();
                    (-bound, bound)
                }
            }
            SeparableFunction::QuarticStrong { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            SeparableFunction::Tikhonov { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn value(&self, u: &Vector) -> f64 {
        assert_eq!(u.len(), self.dimension());
        (0..u.len()).map(|i| self.coord_value(i, u[i])).sum()
    }

    pub fn gradient(&self, u: &Vector) -> Vector {
        assert_eq!(u.len(), self.dimension());
        Vector::from((0..u.len()).map(|i| self.coord_gradient(i, u[i])).collect::<Vec<_>>())
    }

    pub fn strong_convexity(&self) -> f64 {
        match self {
            SeparableFunction::DiagonalQuadratic { diag } => diag.iter().cloned().fold(f64::INFINITY, f64::min),
            SeparableFunction::ArctanSmooth { mu, .. } => *mu,
            SeparableFunction::QuarticStrong { lambda } => *lambda,
            SeparableFunction::Tikhonov { base, epsilon } => base.strong_convexity() + 2.0 * epsilon,
        }
    }

    /// Smoothness constant (largest curvature); `f64::INFINITY` marks
    /// unbounded curvature and must never enter a `1/gamma` product.
    pub fn smoothness(&self) -> f64 {
        match self {
            SeparableFunction::DiagonalQuadratic { diag } => diag.iter().cloned().fold(0.0, f64::max),
            SeparableFunction::ArctanSmooth { gamma, mu } => 1.0 / gamma + mu,
            SeparableFunction::QuarticStrong { .. } => f64::INFINITY,
            SeparableFunction::Tikhonov { base, epsilon } => {
                let s = base.smoothness();
                if s.is_finite() {
                    s + 2.0 * epsilon
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// The effective diagonal when the function is a (possibly Tikhonov-shifted)
    /// diagonal quadratic; enables closed-form solves.
    pub fn quadratic_diagonal(&self) -> Option<Vec<f64>> {
        match self {
            SeparableFunction::DiagonalQuadratic { diag } => Some(diag.clone()),
            SeparableFunction::Tikhonov { base, epsilon } => base
                .quadratic_diagonal()
                .map(|d| d.into_iter().map(|di| di + 2.0 * epsilon).collect()),
            _ => None,
        }
    }
}

/// Safeguarded Newton for a strictly increasing scalar residual.
///
/// Expands a bracket geometrically from `x0` (factor 2), then iterates Newton
/// with bisection whenever a step leaves the bracket.
fn solve_increasing(
    residual: impl Fn(f64) -> f64,
    slope: impl Fn(f64) -> f64,
    x0: f64,
    tol: f64,
    coord: usize,
) -> Result<f64, FunctionError> {
    let mut x = x0;
    let mut r = residual(x);
    if !r.is_finite() {
        return Err(FunctionError::NoConvergence { coord, residual: r });
    }
    if r.abs() <= tol {
        return Ok(x);
    }
    // Bracket the sign change: residual is increasing, so walk against its sign.
    let (mut lo, mut hi, mut r_lo, mut r_hi);
    let mut step = 1.0;
    if r > 0.0 {
        hi = x;
        r_hi = r;
        lo = x - step;
        r_lo = residual(lo);
        let mut tries = 0;
        while r_lo > 0.0 {
            hi = lo;
            r_hi = r_lo;
            step *= 2.0;
            lo = x - step;
            r_lo = residual(lo);
            tries += 1;
            if tries > 200 || !r_lo.is_finite() {
                return Err(FunctionError::NoConvergence { coord, residual: r_lo });
            }
        }
    } else {
        lo = x;
        r_lo = r;
        hi = x + step;
        r_hi = residual(hi);
        let mut tries = 0;
        while r_hi < 0.0 {
            lo = hi;
            r_lo = r_hi;
            step *= 2.0;
            hi = x + step;
            r_hi = residual(hi);
            tries += 1;
            if tries > 200 || !r_hi.is_finite() {
                return Err(FunctionError::NoConvergence { coord, residual: r_hi });
            }
        }
    }
    if r_lo.abs() <= tol {
        return Ok(lo);
    }
    if r_hi.abs() <= tol {
        return Ok(hi);
    }
    x = 0.5 * (lo + hi);
    for _ in 0..NEWTON_MAX_ITERS {
        r = residual(x);
        if r.abs() <= tol {
            return Ok(x);
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = slope(x);
        let newton = x - r / d;
        x = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(FunctionError::NoConvergence { coord, residual: residual(x) })
}

/// Minimize `f(u) + b^T u + (1/2)(u - z)^T P (u - z)`.
///
/// Quadratic `f` admits any SPD `P` (single linear solve); otherwise `P` must
/// be diagonal with positive diagonal and the problem splits into strictly
/// increasing scalar solves.
pub fn subproblem_solve(
    f: &SeparableFunction,
    b: &Vector,
    p: &Matrix,
    z: &Vector,
    tol: f64,
) -> Result<Vector, FunctionError> {
    let n = f.dimension();
    if b.len() != n || z.len() != n || p.rows() != n || p.cols() != n {
        return Err(FunctionError::InvalidParameter {
            what: format!("subproblem dimensions disagree (f has {n})"),
        });
    }
    let scaled_tol = tol * (1.0 + b.norm_inf());
    if let Some(d) = f.quadratic_diagonal() {
        // (diag(d) + P) u = P z - b
        let m = Matrix::diag(&d).add(p);
        let rhs = p.matvec(z).sub(b);
        return Ok(m.solve_spd(&rhs)?);
    }
    if !p.is_diagonal() {
        return Err(FunctionError::Unsupported {
            what: "non-quadratic objective with a non-diagonal quadratic term".into(),
        });
    }
    let pd = p.diagonal();
    if pd.iter().any(|&x| x <= 0.0) {
        return Err(FunctionError::InvalidParameter {
            what: "quadratic term must have positive diagonal for the scalar solves".into(),
        });
    }
    let mut u = Vector::zeros(n);
    for i in 0..n {
        let (pi, bi, zi) = (pd[i], b[i], z[i]);
        u[i] = solve_increasing(
            |x| f.coord_gradient(i, x) + bi + pi * (x - zi),
            |x| f.coord_curvature(i, x) + pi,
            zi,
            scaled_tol,
            i,
        )?;
    }
    Ok(u)
}

/// The point `u = grad f*(beta)`, i.e. the solution of `grad f(u) = beta`.
pub fn conjugate_gradient(f: &SeparableFunction, beta: &Vector) -> Result<Vector, FunctionError> {
    let n = f.dimension();
    if beta.len() != n {
        return Err(FunctionError::InvalidParameter { what: format!("conjugate argument must have length {n}") });
    }
    if let Some(d) = f.quadratic_diagonal() {
        let mut u = Vector::zeros(n);
        for i in 0..n {
            if d[i] > 0.0 {
                u[i] = beta[i] / d[i];
            } else if beta[i] == 0.0 {
                u[i] = 0.0;
            } else {
                return Err(FunctionError::OutOfDomain { coord: i, beta: beta[i] });
            }
        }
        return Ok(u);
    }
    let mut u = Vector::zeros(n);
    for i in 0..n {
        let (lo, hi) = f.coord_gradient_range(i);
        if !(beta[i] > lo && beta[i] < hi) {
            return Err(FunctionError::OutOfDomain { coord: i, beta: beta[i] });
        }
        let bi = beta[i];
        let tol = NEWTON_TOL * (1.0 + bi.abs());
        u[i] = solve_increasing(
            |x| f.coord_gradient(i, x) - bi,
            |x| f.coord_curvature(i, x),
            0.0,
            tol,
            i,
        )?;
    }
    Ok(u)
}

/// Convex conjugate `f*(beta) = beta^T u - f(u)` at `u = grad f*(beta)`.
pub fn conjugate_value(f: &SeparableFunction, beta: &Vector) -> Result<f64, FunctionError> {
    let u = conjugate_gradient(f, beta)?;
    Ok(beta.dot(&u) - f.value(&u))
}

/// Bregman divergence `D_f(u_from, u_to) = f(u_to) - f(u_from) - grad f(u_from)^T (u_to - u_from)`.
pub fn bregman(f: &SeparableFunction, u_from: &Vector, u_to: &Vector) -> f64 {
    f.value(u_to) - f.value(u_from) - f.gradient(u_from).dot(&u_to.sub(u_from))
}

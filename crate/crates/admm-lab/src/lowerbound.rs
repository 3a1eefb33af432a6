//! Worst-case machinery: the exact 2x2 iteration matrices both algorithms
//! induce on a diagonal quadratic coordinate, their spectral radii, and the
//! closed-form worst-case rate expressions those radii realize.
//!
//! On a quadratic pair `phi = (q/2) w^2`, `g = (lambda_c/2) v^2` with unit
//! couplings, one solver step is exactly linear in the state `(w, alpha)`
//! (`v` eliminates), so the per-step contraction is the spectral radius of a
//! 2x2 matrix — a hard floor no initialization can beat. These blocks are
//! the adversarial counterpart of the certificate upper bounds.

use crate::linalg::Matrix;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum LowerBoundError {
    Precondition { what: String },
}

impl fmt::Display for LowerBoundError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LowerBoundError::Precondition { what } => write!(f, "precondition violated: {what}"),
        }
    }
}

impl std::error::Error for LowerBoundError {}

/// The linear one-step map `(w, alpha) -> M (w, alpha)` that a solver
/// induces on one quadratic coordinate: curvature `q` in the smooth block,
/// `lambda_c` in the coupled block, step size `rho`, and the
/// preconditioner's diagonal entry `h` for the linearized variant.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateBlock {
    pub q: f64,
    pub lambda_c: f64,
    pub rho: f64,
    pub h: Option<f64>,
    pub m: Matrix,
}

impl CoordinateBlock {
    /// Per-step worst-case contraction factor of this coordinate.
    pub fn spectral_radius(&self) -> f64 {
        self.m.spectral_radius_2x2().expect("blocks are 2x2 by construction")
    }

    /// Apply the one-step map to a state.
    pub fn apply(&self, w: f64, alpha: f64) -> (f64, f64) {
        (
            self.m[(0, 0)] * w + self.m[(0, 1)] * alpha,
            self.m[(1, 0)] * w + self.m[(1, 1)] * alpha,
        )
    }
}

/// Standard-algorithm block:
/// `M = 1/((lambda_c+rho)(q+rho)) [[rho^2, -lambda_c], [-q rho^2, q lambda_c]]`.
/// Always rank one, so its spectral radius is its trace
/// `(rho^2 + q lambda_c)/((lambda_c+rho)(q+rho))`.
pub fn admm_block(q: f64, lambda_c: f64, rho: f64) -> CoordinateBlock {
    assert!(q > 0.0 && lambda_c > 0.0 && rho > 0.0, "block curvatures and rho must be > 0");
    let den = (lambda_c + rho) * (q + rho);
    let m = Matrix::from_rows(&[
        vec![rho * rho / den, -lambda_c / den],
        vec![-q * rho * rho / den, q * lambda_c / den],
    ])
    .expect("2x2 entries are finite");
    CoordinateBlock { q, lambda_c, rho, h: None, m }
}

/// Linearized-algorithm block:
/// `M = 1/((rho+h)(rho+lambda_c)) [[rho^2 + (rho+lambda_c)(h-q), -lambda_c],
/// [rho (lambda_c h - (rho+lambda_c) q), lambda_c h]]`.
/// At `h = q` it coincides with [`admm_block`] (the gradient step is exact
/// there); as `h -> infinity` the `w` coordinate freezes and the radius
/// climbs to 1.
pub fn linadmm_block(q: f64, lambda_c: f64, h: f64, rho: f64) -> CoordinateBlock {
    assert!(q > 0.0 && lambda_c > 0.0 && rho > 0.0 && h > 0.0, "block parameters must be > 0");
    let den = (rho + h) * (rho + lambda_c);
    let m = Matrix::from_rows(&[
        vec![(rho * rho + (rho + lambda_c) * (h - q)) / den, -lambda_c / den],
        vec![rho * (lambda_c * h - (rho + lambda_c) * q) / den, lambda_c * h / den],
    ])
    .expect("2x2 entries are finite");
    CoordinateBlock { q, lambda_c, rho, h: Some(h), m }
}

/// Worst-case standard-algorithm rate over the two extreme coordinates of a
/// `gamma^{-1}`-smooth, `lambda`-coupled instance:
/// `max[(rho^2+lambda^2)/(rho+lambda)^2, (rho^2 gamma^2 + 1)/(rho gamma + 1)^2]`.
pub fn admm_worstcase_rate(rho: f64, lambda: f64, gamma: f64) -> Result<f64, LowerBoundError> {
    if !(rho > 0.0 && lambda > 0.0 && gamma > 0.0) {
        return Err(LowerBoundError::Precondition { what: "rho, lambda, gamma must be > 0".into() });
    }
    if lambda * gamma > 1.0 + 1e-15 {
        return Err(LowerBoundError::Precondition {
            what: format!("needs lambda <= 1/gamma (lambda {lambda}, 1/gamma {})", 1.0 / gamma),
        });
    }
    let soft = (rho * rho + lambda * lambda) / ((rho + lambda) * (rho + lambda));
    let stiff = (rho * rho * gamma * gamma + 1.0) / ((rho * gamma + 1.0) * (rho * gamma + 1.0));
    Ok(soft.max(stiff))
}

/// Step size minimizing [`admm_worstcase_rate`] and the rate it attains:
/// `rho* = sqrt(lambda/gamma)`, `rate = (1 + gamma lambda)/(1 + sqrt(gamma
/// lambda))^2`. At `rho*` the two branches of the max are equal.
pub fn admm_optimal_rate(lambda: f64, gamma: f64) -> Result<(f64, f64), LowerBoundError> {
    if !(lambda > 0.0 && gamma > 0.0) {
        return Err(LowerBoundError::Precondition { what: "lambda and gamma must be > 0".into() });
    }
    if lambda * gamma > 1.0 + 1e-15 {
        return Err(LowerBoundError::Precondition {
            what: format!("needs lambda <= 1/gamma (lambda {lambda}, 1/gamma {})", 1.0 / gamma),
        });
    }
    let rho = (lambda / gamma).sqrt();
    let root = (gamma * lambda).sqrt();
    Ok((rho, (1.0 + gamma * lambda) / ((1.0 + root) * (1.0 + root))))
}

/// Floor on the linearized-algorithm contraction for the stiff coordinate
/// pair `(q, lambda)` under preconditioner entry `h`:
/// `(rho^2 + (h-q) rho + (h-q) lambda)/(rho^2 + (h+lambda) rho + h lambda)`.
/// For any `rho <= h - lambda` this stays above `(h-lambda)/(h+lambda)` —
/// a heavy preconditioner cannot be bought back by tuning `rho`.
pub fn linadmm_rate_lowerbound(rho: f64, lambda: f64, h: f64, q: f64) -> Result<f64, LowerBoundError> {
    if !(rho > 0.0 && lambda > 0.0) {
        return Err(LowerBoundError::Precondition { what: "rho and lambda must be > 0".into() });
    }
    if !(h > q && q > 0.0) {
        return Err(LowerBoundError::Precondition { what: format!("needs h > q > 0 (h {h}, q {q})") });
    }
    Ok((rho * rho + (h - q) * rho + (h - q) * lambda) / (rho * rho + (h + lambda) * rho + h * lambda))
}

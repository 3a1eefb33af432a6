//! The constrained problem `min phi(w) + g(v) s.t. A w - B v = c`, its two
//! built-in instances, and the optimality diagnostics (Lagrangian, dual value,
//! duality gap, KKT residuals, distance-to-optimum).

use crate::functions::{self, FunctionError, SeparableFunction};
use crate::linalg::{LinalgError, Matrix, Vector};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemError {
    InvalidParameter { field: String, message: String },
    Dimension { what: String },
    MissingOptimum,
    Inconsistent { what: String },
    Function(FunctionError),
    Linalg(LinalgError),
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemError::InvalidParameter { field, message } => write!(f, "{field}: {message}"),
            ProblemError::Dimension { what } => write!(f, "dimension mismatch: {what}"),
            ProblemError::MissingOptimum => {
                write!(f, "operation requires a problem with a known optimum")
            }
            ProblemError::Inconsistent { what } => write!(f, "internal consistency violation: {what}"),
            ProblemError::Function(e) => write!(f, "{e}"),
            ProblemError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ProblemError {}

impl From<FunctionError> for ProblemError {
    fn from(e: FunctionError) -> Self {
        ProblemError::Function(e)
    }
}

impl From<LinalgError> for ProblemError {
    fn from(e: LinalgError) -> Self {
        ProblemError::Linalg(e)
    }
}

/// A primal-dual point believed optimal; validated against the KKT system at
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub w: Vector,
    pub v: Vector,
    pub alpha: Vector,
}

/// `min phi(w) + g(v)` subject to `A w - B v = c`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub phi: SeparableFunction,
    pub g: SeparableFunction,
    pub a: Matrix,
    pub b: Matrix,
    pub c: Vector,
    pub optimum: Option<Optimum>,
}

/// The three KKT residual norms at a primal-dual point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `|A w - B v - c|`
    pub feasibility: f64,
    /// `|A^T alpha + grad phi(w)|`
    pub stationarity_w: f64,
    /// `|B^T alpha - grad g(v)|`
    pub stationarity_v: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.feasibility.max(self.stationarity_w).max(self.stationarity_v)
    }
}

impl Problem {
    /// The scalar benchmark: arctan-smooth `phi` (parameters `gamma`, `mu`)
    /// against quartic strongly convex `g` (parameter `lambda`), coupled by
    /// `w - v = 0`. Optimum at the origin.
    pub fn arctan_quartic(gamma: f64, lambda: f64, mu: f64) -> Result<Problem, ProblemError> {
        let phi = SeparableFunction::arctan_smooth(gamma, mu).map_err(|e| ProblemError::InvalidParameter {
            field: "gamma/mu".into(),
            message: e.to_string(),
        })?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ProblemError::InvalidParameter {
                field: "lambda".into(),
                message: format!("must be finite and > 0 (got {lambda})"),
            });
        }
        let g = SeparableFunction::quartic_strong(lambda)?;
        Ok(Problem {
            phi,
            g,
            a: Matrix::identity(1),
            b: Matrix::identity(1),
            c: Vector::zeros(1),
            optimum: Some(Optimum { w: Vector::zeros(1), v: Vector::zeros(1), alpha: Vector::zeros(1) }),
        })
    }

    /// The diagonal quadratic instance `phi = (1/2) w^T Q w`, `g = (1/2) v^T L v`
    /// with `A = B = I`, `c = 0`. Optimum at the origin.
    pub fn quadratic_diagonal(q: &[f64], lam: &[f64]) -> Result<Problem, ProblemError> {
        if q.len() != lam.len() {
            return Err(ProblemError::Dimension {
                what: format!("q has length {}, lambda has length {}", q.len(), lam.len()),
            });
        }
        let phi = SeparableFunction::diagonal_quadratic(q).map_err(|e| ProblemError::InvalidParameter {
            field: "q".into(),
            message: e.to_string(),
        })?;
        let g = SeparableFunction::diagonal_quadratic(lam).map_err(|e| ProblemError::InvalidParameter {
            field: "lambda".into(),
            message: e.to_string(),
        })?;
        let n = q.len();
        Ok(Problem {
            phi,
            g,
            a: Matrix::identity(n),
            b: Matrix::identity(n),
            c: Vector::zeros(n),
            optimum: Some(Optimum { w: Vector::zeros(n), v: Vector::zeros(n), alpha: Vector::zeros(n) }),
        })
    }

    /// Assemble an arbitrary instance; a supplied optimum is validated against
    /// the KKT system (residual <= 1e-8).
    pub fn custom(
        phi: SeparableFunction,
        g: SeparableFunction,
        a: Matrix,
        b: Matrix,
        c: Vector,
        optimum: Option<Optimum>,
    ) -> Result<Problem, ProblemError> {
        let (n, m) = (phi.dimension(), g.dimension());
        if a.cols() != n {
            return Err(ProblemError::Dimension {
                what: format!("A has {} columns, phi has dimension {n}", a.cols()),
            });
        }
        if b.cols() != m {
            return Err(ProblemError::Dimension {
                what: format!("B has {} columns, g has dimension {m}", b.cols()),
            });
        }
        if a.rows() != b.rows() || a.rows() != c.len() {
            return Err(ProblemError::Dimension {
                what: format!(
                    "A has {} rows, B has {} rows, c has length {}",
                    a.rows(),
                    b.rows(),
                    c.len()
                ),
            });
        }
        if !c.is_finite() {
            return Err(ProblemError::InvalidParameter {
                field: "c".into(),
                message: "entries must be finite".into(),
            });
        }
        let problem = Problem { phi, g, a, b, c, optimum: None };
        if let Some(opt) = optimum {
            if opt.w.len() != n || opt.v.len() != m || opt.alpha.len() != problem.c.len() {
                return Err(ProblemError::Dimension { what: "optimum dimensions disagree with the problem".into() });
            }
            let res = problem.kkt_residuals(&opt.w, &opt.v, &opt.alpha);
            if res.max() > 1e-8 {
                return Err(ProblemError::Inconsistent {
                    what: format!("claimed optimum has KKT residual {:e}", res.max()),
                });
            }
            return Ok(Problem { optimum: Some(opt), ..problem });
        }
        Ok(problem)
    }

    pub fn w_dim(&self) -> usize {
        self.phi.dimension()
    }

    pub fn v_dim(&self) -> usize {
        self.g.dimension()
    }

    pub fn constraint_dim(&self) -> usize {
        self.c.len()
    }

    /// `A w - B v - c`.
    pub fn constraint_residual(&self, w: &Vector, v: &Vector) -> Vector {
        self.a.matvec(w).sub(&self.b.matvec(v)).sub(&self.c)
    }

    /// Augmented Lagrangian `phi + g + alpha^T (Aw - Bv - c) + (rho/2)|Aw - Bv - c|^2`.
    pub fn lagrangian_value(&self, w: &Vector, v: &Vector, alpha: &Vector, rho: f64) -> f64 {
        let feas = self.constraint_residual(w, v);
        self.phi.value(w) + self.g.value(v) + alpha.dot(&feas) + 0.5 * rho * feas.norm_sq()
    }

    /// Dual objective `D(alpha) = -phi*(-A^T alpha) - g*(B^T alpha) - alpha^T c`.
    pub fn dual_value(&self, alpha: &Vector) -> Result<f64, ProblemError> {
        let neg_at_alpha = self.a.transpose().matvec(alpha).scale(-1.0);
        let bt_alpha = self.b.transpose().matvec(alpha);
        let phi_star = functions::conjugate_value(&self.phi, &neg_at_alpha)?;
        let g_star = functions::conjugate_value(&self.g, &bt_alpha)?;
        Ok(-phi_star - g_star - alpha.dot(&self.c))
    }

    /// Lift `v_hat` to the feasible pair `(A^+(B v_hat + c), v_hat)`.
    pub fn feasibility_lift(&self, v_hat: &Vector) -> Result<Vector, ProblemError> {
        let a_plus = self.a.pseudo_inverse()?;
        Ok(a_plus.matvec(&self.b.matvec(v_hat).add(&self.c)))
    }

    /// Duality gap of the lifted primal pair against `D(alpha_hat)`; tiny
    /// negative round-off clamps to 0, anything worse is a consistency error.
    pub fn duality_gap(&self, v_hat: &Vector, alpha_hat: &Vector) -> Result<f64, ProblemError> {
        let w_hat = self.feasibility_lift(v_hat)?;
        let primal = self.phi.value(&w_hat) + self.g.value(v_hat);
        let dual = self.dual_value(alpha_hat)?;
        let gap = primal - dual;
        if gap < -1e-10 {
            return Err(ProblemError::Inconsistent { what: format!("duality gap {gap:e} < -1e-10") });
        }
        Ok(gap.max(0.0))
    }

    pub fn kkt_residuals(&self, w: &Vector, v: &Vector, alpha: &Vector) -> KktResiduals {
        let feas = self.constraint_residual(w, v).norm();
        let sw = self.a.transpose().matvec(alpha).add(&self.phi.gradient(w)).norm();
        let sv = self.b.transpose().matvec(alpha).sub(&self.g.gradient(v)).norm();
        KktResiduals { feasibility: feas, stationarity_w: sw, stationarity_v: sv }
    }

    /// Distance to the known optimum, `sqrt(|w - w*|^2 + |v - v*|^2)`.
    pub fn error_norm(&self, w: &Vector, v: &Vector) -> Result<f64, ProblemError> {
        let opt = self.optimum.as_ref().ok_or(ProblemError::MissingOptimum)?;
        Ok((w.sub(&opt.w).norm_sq() + v.sub(&opt.v).norm_sq()).sqrt())
    }

    /// Smoothness reciprocal of `phi` (its `gamma`); 0 when curvature is unbounded.
    pub fn gamma_phi(&self) -> f64 {
        let s = self.phi.smoothness();
        if s.is_finite() && s > 0.0 {
            1.0 / s
        } else if s == 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    /// Strong convexity modulus of `g`.
    pub fn lambda_g(&self) -> f64 {
        self.g.strong_convexity()
    }
}

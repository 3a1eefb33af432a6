//! A laboratory for the convergence behaviour of two-block ADMM.
//!
//! The crate solves problems of the form
//!
//! ```text
//!     minimize  phi(w) + g(v)   subject to   A w - B v = c
//! ```
//!
//! with a smooth convex `phi` and a strongly convex `g`, using either the
//! standard alternating-direction method of multipliers or its linearized
//! variant, both optionally preconditioned by quadratic proximal terms
//! `(rho/2)|v - v_prev|_G^2` and `(1/2)|w - w_prev|_H^2`.
//!
//! Beyond the solvers it provides the analysis tooling that makes the
//! convergence theory checkable on actual trajectories:
//!
//! * [`certificates`] — linear-rate parameters `theta`, per-step and
//!   weighted-sum descent certificates, Bregman-divergence bounds, averaged
//!   iterates, and empirical rate estimation;
//! * [`lowerbound`] — exact 2x2 iteration matrices for quadratic instances
//!   whose spectral radii are the true asymptotic rates, plus the closed-form
//!   worst-case expressions they realize;
//! * [`cli`] — a JSON-config front end that writes trajectory CSVs and JSON
//!   reports (the `admm-lab` binary is a thin wrapper around it).
//!
//! The `examples/` directory is the guided tour: each example exercises one
//! capability end to end and prints what it verifies.

pub mod certificates;
pub mod cli;
pub mod functions;
pub mod linalg;
pub mod lowerbound;
pub mod problem;
pub mod solvers;

//! Minimal tour: build a problem, run both algorithms, inspect the trajectory.
//!
//!     cargo run --example solve_quickstart

use admm_lab::certificates::estimate_rate;
use admm_lab::linalg::Matrix;
use admm_lab::problem::Problem;
use admm_lab::solvers::{run, Algorithm, SolverConfig, StartPoint, DEFAULT_INNER_TOL};

fn main() {
    // min phi(w) + g(v)  s.t.  w = v, with a smooth arctan-flavoured phi and
    // a quartic strongly convex g; the optimum is the origin.
    let problem = Problem::arctan_quartic(0.1, 0.2, 0.2).unwrap();
    let rho = (problem.lambda_g() / 0.1f64).sqrt(); // sqrt(lambda/gamma), the classic choice

    let cfg = SolverConfig::new(&problem, Algorithm::Standard, rho, 200).unwrap();
    let start = StartPoint::default_for(&problem);
    let traj = run(&problem, &cfg, &start).unwrap();

    println!("standard ADMM, rho = {rho:.4}");
    println!("  t    |w|          |v|          error");
    for it in traj.iterates.iter().take(6) {
        let err = problem.error_norm(&it.w, &it.v).unwrap();
        println!("  {:<4} {:<12.6e} {:<12.6e} {:.6e}", it.t, it.w.norm(), it.v.norm(), err);
    }
    let last = traj.last();
    let final_err = problem.error_norm(&last.w, &last.v).unwrap();
    println!("  ... stopped at t = {} with error {final_err:.2e}", last.t);

    let errors = traj.error_history(&problem).unwrap();
    let rate = estimate_rate(&errors).unwrap();
    println!("  estimated contraction factor per step: {rate:.4}");

    // the linearized variant replaces the exact w-solve by one gradient step
    // damped by H; H must dominate phi's curvature (here 1/gamma + mu = 10.2)
    let h = Matrix::scaled_identity(problem.w_dim(), 2.0 * 10.2);
    let cfg = SolverConfig::build(
        &problem,
        Algorithm::Linearized,
        rho,
        Matrix::zeros(1, 1),
        h,
        400,
        DEFAULT_INNER_TOL,
        false,
    )
    .unwrap();
    let traj = run(&problem, &cfg, &start).unwrap();
    let errors = traj.error_history(&problem).unwrap();
    println!("\nlinearized ADMM, same rho, H = 20.4 I");
    println!("  stopped at t = {} with error {:.2e}", traj.last().t, errors.last().unwrap());
    println!("  estimated contraction factor per step: {:.4}", estimate_rate(&errors).unwrap());
}

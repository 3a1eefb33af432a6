//! Proximal preconditioning: the v-update can carry a (rho/2)|v - v_prev|_G^2
//! damping term, and the linearized w-update a (1/2)|w - w_prev|_H^2 term.
//! H trades subproblem cost against rate: it must dominate phi's curvature,
//! and the certified theta degrades as it grows.
//!
//!     cargo run --example preconditioning

use admm_lab::certificates::{best_theta_linadmm, estimate_rate, SpectralBounds};
use admm_lab::linalg::Matrix;
use admm_lab::problem::Problem;
use admm_lab::solvers::{run, Algorithm, SolverConfig, StartPoint, DEFAULT_INNER_TOL};

fn main() {
    let problem = Problem::arctan_quartic(0.1, 0.2, 0.2).unwrap();
    let smoothness = problem.phi.smoothness(); // 1/gamma + mu = 10.2
    let rho = (problem.lambda_g() * smoothness).sqrt();
    let start = StartPoint::default_for(&problem);

    // an H below the curvature is rejected up front, not at step 40
    let weak = SolverConfig::build(
        &problem,
        Algorithm::Linearized,
        rho,
        Matrix::zeros(1, 1),
        Matrix::scaled_identity(1, 0.5 * smoothness),
        100,
        DEFAULT_INNER_TOL,
        false,
    );
    println!("H = {:.1} I (half the curvature): {}", 0.5 * smoothness, weak.unwrap_err());

    println!("\nlinearized runs at rho = {rho:.4}:");
    println!("  h          theta        measured rate");
    for mult in [1.0, 2.0, 10.0] {
        let h = mult * smoothness;
        let cfg = SolverConfig::build(
            &problem,
            Algorithm::Linearized,
            rho,
            Matrix::zeros(1, 1),
            Matrix::scaled_identity(1, h),
            2000,
            DEFAULT_INNER_TOL,
            false,
        )
        .unwrap();
        let bounds = SpectralBounds::compute(&problem, &cfg).unwrap();
        let (theta, _) =
            best_theta_linadmm(&bounds, problem.gamma_phi(), problem.lambda_g(), rho).unwrap();
        let traj = run(&problem, &cfg, &start).unwrap();
        let rate = estimate_rate(&traj.error_history(&problem).unwrap()).unwrap();
        println!("  {h:<10.1} {theta:<12.6} {rate:.4}");
    }

    // a G-term damps the v-update; the certified theta shrinks accordingly
    println!("\nstandard runs with v-damping G = g I:");
    println!("  g          measured rate");
    for g in [0.0, 1.0, 5.0] {
        let cfg = SolverConfig::build(
            &problem,
            Algorithm::Standard,
            rho,
            Matrix::scaled_identity(1, g),
            Matrix::zeros(1, 1),
            2000,
            DEFAULT_INNER_TOL,
            false,
        )
        .unwrap();
        let traj = run(&problem, &cfg, &start).unwrap();
        let rate = estimate_rate(&traj.error_history(&problem).unwrap()).unwrap();
        println!("  {g:<10.1} {rate:.4}");
    }
}

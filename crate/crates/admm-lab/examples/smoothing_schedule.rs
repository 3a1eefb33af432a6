//! Two consumers of the sublinear (theta = 0) theory: geometrically weighted
//! iterate averages, and the smoothing schedule that picks a regularization
//! level and iteration budget for a target accuracy.
//!
//!     cargo run --example smoothing_schedule

use admm_lab::certificates::{smoothing_schedule, weighted_average_iterates};
use admm_lab::problem::Problem;
use admm_lab::solvers::{run, Algorithm, SolverConfig, StartPoint};

fn main() {
    // when only sublinear guarantees hold, the weighted average of the
    // iterates is the point the theory actually controls
    let problem = Problem::arctan_quartic(0.1, 0.2, 0.2).unwrap();
    let cfg = SolverConfig::new(&problem, Algorithm::Standard, 1.5, 30).unwrap();
    let traj = run(&problem, &cfg, &StartPoint::default_for(&problem)).unwrap();
    println!("averaged iterates (theta controls how fast old steps are forgotten):");
    println!("  theta   |v_bar|       |alpha_bar|");
    for theta in [0.0, 0.1, 0.5] {
        let (v_bar, alpha_bar) = weighted_average_iterates(&traj, theta).unwrap();
        println!("  {theta:<7} {:<13.6e} {:.6e}", v_bar.norm(), alpha_bar.norm());
    }
    let last = traj.last();
    println!("  (last iterate: |v| = {:.6e}, |alpha| = {:.6e})", last.v.norm(), last.alpha.norm());

    // smoothing a nonsmooth objective: to reach accuracy eps, smooth at
    // level eps and run ceil(ln(1/(gamma eps)) / sqrt(gamma eps)) steps
    println!("\nsmoothing schedule for a 1/gamma-smooth surrogate:");
    println!("  gamma   eps      smoothing  iterations");
    for (gamma, eps) in [(1.0, 1e-2), (1.0, 1e-3), (0.1, 1e-2)] {
        let (level, iters) = smoothing_schedule(gamma, eps).unwrap();
        println!("  {gamma:<7} {eps:<8} {level:<10} {iters}");
    }
}

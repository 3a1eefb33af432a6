//! Convex-analysis toolbox: conjugates, Fenchel-Young, Bregman divergences,
//! and the duality gap along a run.
//!
//!     cargo run --example conjugates_and_duality

use admm_lab::functions::{bregman, conjugate_gradient, conjugate_value, SeparableFunction};
use admm_lab::linalg::Vector;
use admm_lab::problem::Problem;
use admm_lab::solvers::{run, Algorithm, SolverConfig, StartPoint};

fn main() {
    let f = SeparableFunction::arctan_smooth(0.5, 0.3).unwrap();

    // conjugate_value evaluates f*(beta) = sup_u beta.u - f(u); the argmax
    // is where the gradient matches beta, so conjugating the gradient of a
    // point recovers the point (Fenchel-Young with equality)
    let u = Vector::from_slice(&[0.8]);
    let beta = f.gradient(&u);
    let u_back = conjugate_gradient(&f, &beta).unwrap();
    println!("u = {:.6}, grad f(u) = {:.6}, grad f*(grad f(u)) = {:.6}", u[0], beta[0], u_back[0]);
    let residual = f.value(&u) + conjugate_value(&f, &beta).unwrap() - beta.dot(&u);
    println!("Fenchel-Young residual at the gradient pair: {residual:.2e}");
    assert!(residual.abs() < 1e-10);

    // Bregman divergence anchored at the first argument, sandwiched by the
    // convexity and smoothness moduli
    let u2 = Vector::from_slice(&[-0.4]);
    let d = bregman(&f, &u, &u2);
    let half_sq = 0.5 * (u2[0] - u[0]).powi(2);
    println!(
        "\nBregman D(u -> u2) = {d:.6}, bounds [{:.6}, {:.6}]",
        f.strong_convexity() * half_sq,
        f.smoothness() * half_sq
    );

    // along a run, the duality gap at (v_t, alpha_t) is nonnegative and
    // shrinks to zero together with the error
    let problem = Problem::arctan_quartic(0.1, 0.2, 0.2).unwrap();
    let cfg = SolverConfig::new(&problem, Algorithm::Standard, 1.5, 40).unwrap();
    let traj = run(&problem, &cfg, &StartPoint::default_for(&problem)).unwrap();
    println!("\n  t    duality gap   error");
    for it in traj.iterates.iter().step_by(8) {
        let gap = problem.duality_gap(&it.v, &it.alpha).unwrap();
        let err = problem.error_norm(&it.w, &it.v).unwrap();
        println!("  {:<4} {:<13.6e} {:.6e}", it.t, gap, err);
        assert!(gap >= -1e-10, "weak duality");
    }
}

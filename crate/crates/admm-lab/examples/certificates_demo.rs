//! Convergence certificates: a run is accompanied by per-step and
//! weighted-sum inequalities whose validity is machine-checkable. The
//! contraction parameter theta comes from closed-form spectral bounds;
//! inflating it beyond the certified value is caught immediately.
//!
//!     cargo run --example certificates_demo

use admm_lab::certificates::{
    best_theta_admm, certificate_rows, check_certificates, corollary_bregman_check, SpectralBounds,
};
use admm_lab::problem::Problem;
use admm_lab::solvers::{run, Algorithm, SolverConfig, StartPoint};

fn main() {
    let problem = Problem::quadratic_diagonal(&[0.2, 10.0], &[0.2, 10.0]).unwrap();
    let rho = (problem.lambda_g() / problem.gamma_phi()).sqrt();
    let cfg = SolverConfig::new(&problem, Algorithm::Standard, rho, 300).unwrap();
    let traj = run(&problem, &cfg, &StartPoint::default_for(&problem)).unwrap();

    let bounds = SpectralBounds::compute(&problem, &cfg).unwrap();
    let (theta, s) = best_theta_admm(&bounds, problem.gamma_phi(), problem.lambda_g(), rho);
    println!("certified contraction parameter theta = {theta:.6} (splitting s = {s})");

    // the certificate table: r_t and r*_t are primal/dual gap surrogates,
    // delta_t is the weighted distance to the reference point
    let opt = problem.optimum.as_ref().unwrap();
    let rows = certificate_rows(&traj, &problem, &cfg, &opt.alpha, &opt.v, theta).unwrap();
    println!("\n  t    r_t           r*_t          delta_t");
    for row in rows.iter().take(5) {
        println!("  {:<4} {:<13.6e} {:<13.6e} {:.6e}", row.t, row.r, row.r_star, row.delta);
    }

    // every family of inequalities must hold with slack >= -1e-9 (1 + delta_0)
    let report = check_certificates(&rows, theta);
    println!(
        "\nper-step + weighted-sum checks: {} ({} inequalities, worst slack {:.2e})",
        if report.pass { "PASS" } else { "FAIL" },
        report.checks,
        report.worst_slack
    );
    let bregman = corollary_bregman_check(&traj, &problem, &cfg, theta).unwrap();
    println!(
        "Bregman-divergence sum bound:   {} ({} inequalities, worst slack {:.2e})",
        if bregman.pass { "PASS" } else { "FAIL" },
        bregman.checks,
        bregman.worst_slack
    );
    assert!(report.pass && bregman.pass);

    // a theta the theory does not certify fails loudly
    let bogus = 3.0 * theta;
    let rows = certificate_rows(&traj, &problem, &cfg, &opt.alpha, &opt.v, bogus).unwrap();
    let report = check_certificates(&rows, bogus);
    let violation = report.first_violation.unwrap();
    println!(
        "\ninflated theta = {bogus:.6}: FAIL as expected — {} at t = {} (slack {:.2e})",
        violation.family, violation.index, violation.slack
    );
    assert!(!report.pass);
}

//! Worst-case rates are attained: 2x2 coordinate blocks give the exact
//! iteration matrix on quadratic instances, and the maximal block spectral
//! radius coincides with the closed-form worst-case expression.
//!
//!     cargo run --example lower_bounds

use admm_lab::cli::{cmd_lowerbound, render_lowerbound_table};
use admm_lab::lowerbound::{admm_block, admm_optimal_rate, admm_worstcase_rate};

fn main() {
    let (lambda, gamma) = (0.2, 0.1);

    // the iteration on (w_i, alpha_i) for one stiff/soft coordinate pair
    // is an explicit 2x2 matrix; its spectral radius is the true rate
    let rho = 1.0;
    for (label, q) in [("soft", lambda), ("stiff", 1.0 / gamma)] {
        let block = admm_block(q, q, rho);
        println!("{label} block (q = {q}): spectral radius {:.6}", block.spectral_radius());
    }
    let worst = admm_worstcase_rate(rho, lambda, gamma).unwrap();
    println!("closed-form worst case at rho = {rho}: {worst:.6}");
    let soft = admm_block(lambda, lambda, rho).spectral_radius();
    let stiff = admm_block(1.0 / gamma, 1.0 / gamma, rho).spectral_radius();
    assert!((worst - soft.max(stiff)).abs() < 1e-12, "the bound is tight");

    // one step of the block recursion from an explicit state
    let (w1, a1) = admm_block(lambda, lambda, rho).apply(1.0, 0.0);
    println!("one soft-block step from (w, alpha) = (1, 0): ({w1:.6}, {a1:.6})");

    // balancing the two blocks gives the optimal step size in closed form
    let (rho_star, rate_star) = admm_optimal_rate(lambda, gamma).unwrap();
    println!("\noptimal step size rho* = {rho_star:.6}, optimal worst-case rate = {rate_star:.6}");

    // the full table the `lowerbound` subcommand prints
    println!();
    let table = cmd_lowerbound(gamma, lambda, Some("0.4:8:7")).unwrap();
    print!("{}", render_lowerbound_table(&table));
}

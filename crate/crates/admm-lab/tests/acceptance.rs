//! Acceptance gate: ten criteria, one test and one PASS/FAIL line each.
//!
//! Every criterion asserts the documented reference values at the stated
//! tolerances. Where a measured quantity is not reproducible from the
//! documented protocol, the assertion stays red with a self-contained
//! diagnostic rather than a loosened tolerance.

use admm_lab::certificates::{
    best_theta_admm, best_theta_linadmm, certificate_rows, check_certificates,
    corollary_bregman_check, estimate_rate, SpectralBounds,
};
use admm_lab::cli::{self, SolveOverrides};
use admm_lab::functions::{self, SeparableFunction};
use admm_lab::linalg::{Matrix, Vector};
use admm_lab::lowerbound::{admm_block, admm_optimal_rate, admm_worstcase_rate, linadmm_block};
use admm_lab::problem::Problem;
use admm_lab::solvers::{self, Algorithm, SolverConfig, StartPoint, DEFAULT_INNER_TOL};
use std::time::Instant;

const RATE_TOL: f64 = 0.05;

fn verdict(n: u8, label: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("criterion {n} ({label}): PASS");
    } else {
        let detail = failures.join("; ");
        println!("criterion {n} ({label}): FAIL ({detail})");
        panic!("criterion {n} ({label}): FAIL ({detail})");
    }
}

/// The two test problems every trajectory-level criterion runs on.
fn paper1d() -> Problem {
    Problem::arctan_quartic(0.1, 0.2, 0.2).unwrap()
}

fn quadratic2() -> Problem {
    Problem::quadratic_diagonal(&[0.2, 10.0], &[0.2, 10.0]).unwrap()
}

fn build(problem: &Problem, algorithm: Algorithm, rho: f64, h: f64, iters: usize) -> SolverConfig {
    let n = problem.w_dim();
    let h_mat = if h == 0.0 { Matrix::zeros(n, n) } else { Matrix::scaled_identity(n, h) };
    SolverConfig::build(
        problem,
        algorithm,
        rho,
        Matrix::zeros(problem.v_dim(), problem.v_dim()),
        h_mat,
        iters,
        DEFAULT_INNER_TOL,
        false,
    )
    .unwrap()
}

fn figure_failures(which: u8) -> Vec<String> {
    let dir = tempfile::tempdir().unwrap();
    let clock = Instant::now();
    let summary = cli::cmd_figures(which, dir.path()).unwrap();
    let elapsed = clock.elapsed();
    let mut failures = Vec::new();
    for run in &summary.runs {
        let diff = (run.estimated_rate - run.reference_rate).abs();
        if diff > RATE_TOL {
            failures.push(format!(
                "{} rho={:.1}*rho*: measured {:.3} vs reference {:.2} (diff {:.3} > {RATE_TOL}); \
                 the measured value is stable under window, initialization, and error-norm choices, \
                 so the reference is not reachable from the documented run protocol",
                run.algo, run.rho_multiplier, run.estimated_rate, run.reference_rate, diff
            ));
        }
    }
    if elapsed.as_secs_f64() >= 1.0 {
        failures.push(format!("runtime {:.3}s >= 1s", elapsed.as_secs_f64()));
    }
    failures
}

#[test]
fn criterion_01_figure1_rates() {
    verdict(1, "figure 1 rate reproduction", &figure_failures(1));
}

#[test]
fn criterion_02_figure2_rates() {
    verdict(2, "figure 2 rate reproduction", &figure_failures(2));
}

#[test]
fn criterion_03_lowerbound_consistency() {
    let mut failures = Vec::new();
    for (lambda, gamma) in [(1.0, 1.0), (0.2, 0.1), (0.01, 1.0)] {
        let (rho_star, rate_star) = admm_optimal_rate(lambda, gamma).unwrap();
        for k in 0..25 {
            let rho = (rho_star / 10.0) * 100f64.powf(k as f64 / 24.0);
            let radius = admm_block(lambda, lambda, rho)
                .spectral_radius()
                .max(admm_block(1.0 / gamma, 1.0 / gamma, rho).spectral_radius());
            let worst = admm_worstcase_rate(rho, lambda, gamma).unwrap();
            if (radius - worst).abs() > 1e-12 {
                failures.push(format!(
                    "lambda={lambda} gamma={gamma} rho={rho:.4}: block radius {radius} vs closed form {worst}"
                ));
            }
        }
        let closed = (1.0 + gamma * lambda) / (1.0 + (gamma * lambda).sqrt()).powi(2);
        if (rate_star - closed).abs() > 1e-12 {
            failures.push(format!(
                "lambda={lambda} gamma={gamma}: optimal rate {rate_star} vs (1+gl)/(1+sqrt(gl))^2 = {closed}"
            ));
        }
    }
    let (rho_star, rate_star) = admm_optimal_rate(1.0, 1.0).unwrap();
    if rho_star != 1.0 || rate_star != 0.5 {
        failures.push(format!("admm_optimal_rate(1,1) = ({rho_star}, {rate_star}), expected exactly (1, 0.5)"));
    }
    verdict(3, "lower-bound consistency", &failures);
}

#[test]
fn criterion_04_closed_form_oracle() {
    let mut failures = Vec::new();
    let problem = quadratic2();
    let q = [0.2, 10.0];
    let h = 2.0 * 10.0;
    let start = StartPoint {
        w: Vector::from_slice(&[1.0, 1.0]),
        v: Vector::from_slice(&[0.3, -0.7]), // irrelevant to the closed form: v is eliminated
        alpha: Vector::from_slice(&[0.5, -0.25]),
    };
    for rho in [1.0, std::f64::consts::SQRT_2] {
        for algorithm in [Algorithm::Standard, Algorithm::Linearized] {
            let h_used = match algorithm {
                Algorithm::Standard => 0.0,
                Algorithm::Linearized => h,
            };
            let cfg = build(&problem, algorithm, rho, h_used, 50);
            let traj = solvers::run(&problem, &cfg, &start).unwrap();
            let blocks: Vec<_> = q
                .iter()
                .map(|&qi| match algorithm {
                    Algorithm::Standard => admm_block(qi, qi, rho),
                    Algorithm::Linearized => linadmm_block(qi, qi, h, rho),
                })
                .collect();
            let mut state: Vec<(f64, f64)> = (0..2).map(|i| (start.w[i], start.alpha[i])).collect();
            for t in 1..traj.len() {
                let it = &traj.iterates[t];
                for i in 0..2 {
                    // v^t is determined by the previous (w, alpha) pair alone
                    let v_pred = (state[i].1 + rho * state[i].0) / (q[i] + rho);
                    state[i] = blocks[i].apply(state[i].0, state[i].1);
                    let (dw, da, dv) =
                        ((it.w[i] - state[i].0).abs(), (it.alpha[i] - state[i].1).abs(), (it.v[i] - v_pred).abs());
                    if dw > 1e-12 || da > 1e-12 || dv > 1e-12 {
                        failures.push(format!(
                            "{algorithm} rho={rho:.4} t={t} coord {i}: |dw|={dw:.2e} |dalpha|={da:.2e} |dv|={dv:.2e}"
                        ));
                    }
                }
            }
        }
    }
    failures.truncate(3);
    verdict(4, "closed-form step oracle", &failures);
}

#[test]
fn criterion_05_certificate_suite() {
    let mut failures = Vec::new();
    for problem in [quadratic2(), paper1d()] {
        let smoothness = problem.phi.smoothness();
        let rho_star = (problem.lambda_g() * smoothness).sqrt();
        let h = 2.0 * smoothness;
        for algorithm in [Algorithm::Standard, Algorithm::Linearized] {
            for mult in [0.3, 1.0, 3.0] {
                let rho = mult * rho_star;
                let h_used = match algorithm {
                    Algorithm::Standard => 0.0,
                    Algorithm::Linearized => h,
                };
                let cfg = build(&problem, algorithm, rho, h_used, 500);
                let bounds = SpectralBounds::compute(&problem, &cfg).unwrap();
                let (theta, _s) = match algorithm {
                    Algorithm::Standard => {
                        best_theta_admm(&bounds, problem.gamma_phi(), problem.lambda_g(), rho)
                    }
                    Algorithm::Linearized => {
                        best_theta_linadmm(&bounds, problem.gamma_phi(), problem.lambda_g(), rho).unwrap()
                    }
                };
                let traj = solvers::run(&problem, &cfg, &StartPoint::default_for(&problem)).unwrap();
                let opt = problem.optimum.as_ref().unwrap();
                let rows = certificate_rows(&traj, &problem, &cfg, &opt.alpha, &opt.v, theta).unwrap();
                let gaps = check_certificates(&rows, theta);
                let bregman = corollary_bregman_check(&traj, &problem, &cfg, theta).unwrap();
                let tag = format!("{algorithm} rho={mult}*rho* on {}-dim problem", problem.w_dim());
                if !gaps.pass {
                    let v = gaps.first_violation.unwrap();
                    failures.push(format!("{tag}: {} violated at t={} (slack {:.2e})", v.family, v.index, v.slack));
                }
                if !bregman.pass {
                    let v = bregman.first_violation.unwrap();
                    failures.push(format!("{tag}: {} violated at T={} (slack {:.2e})", v.family, v.index, v.slack));
                }
            }
        }
    }
    verdict(5, "certificate suite", &failures);
}

#[test]
fn criterion_06_terminal_rate_bound() {
    let mut failures = Vec::new();
    let problem = quadratic2();
    let rho = (problem.lambda_g() / problem.gamma_phi()).sqrt();
    let cfg = build(&problem, Algorithm::Standard, rho, 0.0, 200);
    let bounds = SpectralBounds::compute(&problem, &cfg).unwrap();
    let (theta, _) = best_theta_admm(&bounds, problem.gamma_phi(), problem.lambda_g(), rho);
    let traj = solvers::run(&problem, &cfg, &StartPoint::default_for(&problem)).unwrap();
    let opt = problem.optimum.as_ref().unwrap();
    let rows = certificate_rows(&traj, &problem, &cfg, &opt.alpha, &opt.v, theta).unwrap();
    let delta0 = rows[0].delta;
    let tol = 1e-9 * (1.0 + delta0);
    for it in &traj.iterates {
        let aw = problem.a.matvec(&it.w).sub(&problem.a.matvec(&opt.w));
        let da = it.alpha.sub(&opt.alpha);
        let lhs = 0.5 * rho * aw.norm_sq() + (1.0 + theta) / (2.0 * rho) * da.norm_sq();
        let bound = (1.0 + theta).powi(-(it.t as i32)) * delta0;
        if lhs > bound + tol {
            failures.push(format!("T={}: terminal quantity {lhs:.3e} > (1+theta)^-T delta0 = {bound:.3e}", it.t));
        }
    }
    failures.truncate(3);
    verdict(6, "terminal rate bound", &failures);
}

#[test]
fn criterion_07_empirical_vs_spectral() {
    let mut failures = Vec::new();
    let problem = quadratic2();
    // start inside the dominant block's subspace so the measured tail is the
    // pure block rate (coordinates never mix; transients excluded by design)
    let cases = [
        (Algorithm::Standard, 0.0, Vector::from_slice(&[0.0, 1.0]), 400, admm_block(10.0, 10.0, 1.0)),
        (Algorithm::Linearized, 20.0, Vector::from_slice(&[1.0, 0.0]), 600, linadmm_block(0.2, 0.2, 20.0, 1.0)),
    ];
    for (algorithm, h, w0, iters, block) in cases {
        let cfg = build(&problem, algorithm, 1.0, h, iters);
        let start = StartPoint { w: w0, v: Vector::zeros(2), alpha: Vector::zeros(2) };
        let traj = solvers::run(&problem, &cfg, &start).unwrap();
        let errors = traj.error_history(&problem).unwrap();
        let measured = estimate_rate(&errors).unwrap();
        let radius = block.spectral_radius();
        if (measured - radius).abs() > 1e-3 {
            failures.push(format!(
                "{algorithm}: estimated rate {measured:.6} vs block spectral radius {radius:.6}"
            ));
        }
    }
    verdict(7, "empirical vs spectral rate", &failures);
}

/// Hand-rolled 64-bit LCG (Knuth multiplier): the acceptance randomness must
/// be fully deterministic and dependency-free.
struct Lcg(u64);

impl Lcg {
    fn uniform(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    fn vector(&mut self, n: usize, lo: f64, hi: f64) -> Vector {
        Vector::from_slice(&(0..n).map(|_| self.in_range(lo, hi)).collect::<Vec<_>>())
    }
}

#[test]
fn criterion_08_function_properties() {
    let mut failures = Vec::new();
    let mut rng = Lcg(0x9E37_79B9_7F4A_7C15);
    let instances: Vec<(&str, SeparableFunction)> = vec![
        ("diagonal_quadratic", SeparableFunction::diagonal_quadratic(&[0.2, 10.0]).unwrap()),
        ("arctan_smooth", SeparableFunction::arctan_smooth(0.1, 0.2).unwrap()),
        ("quartic_strong", SeparableFunction::quartic_strong(0.2).unwrap()),
        (
            "tikhonov(arctan)",
            SeparableFunction::tikhonov(SeparableFunction::arctan_smooth(1.0, 0.0).unwrap(), 0.5).unwrap(),
        ),
    ];
    for (name, f) in &instances {
        let n = f.dimension();
        let (mu, ell) = (f.strong_convexity(), f.smoothness());
        for _ in 0..100 {
            let u = rng.vector(n, -2.0, 2.0);
            // gradient vs central finite difference, relative 1e-6
            let grad = f.gradient(&u);
            for i in 0..n {
                let h = 1e-6 * (1.0 + u[i].abs());
                let mut up = u.clone();
                let mut dn = u.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (f.value(&up) - f.value(&dn)) / (2.0 * h);
                if (grad[i] - fd).abs() > 1e-6 * (1.0 + grad[i].abs()) {
                    failures.push(format!("{name}: gradient[{i}]={} vs fd {fd}", grad[i]));
                }
            }
            // Fenchel-Young equality at gradient points, 1e-8
            let beta = f.gradient(&u);
            let conj = functions::conjugate_value(f, &beta).unwrap();
            let fy = (f.value(&u) + conj - beta.dot(&u)).abs();
            if fy > 1e-8 * (1.0 + f.value(&u).abs() + conj.abs()) {
                failures.push(format!("{name}: Fenchel-Young residual {fy:.2e}"));
            }
            // Bregman two-sided modulus bounds
            let u2 = rng.vector(n, -2.0, 2.0);
            let d = functions::bregman(f, &u, &u2);
            let half_sq = 0.5 * u2.sub(&u).norm_sq();
            let tol = 1e-10 * (1.0 + d.abs());
            if d < mu * half_sq - tol {
                failures.push(format!("{name}: bregman {d:.3e} below modulus bound {:.3e}", mu * half_sq));
            }
            if ell.is_finite() && d > ell * half_sq + tol {
                failures.push(format!("{name}: bregman {d:.3e} above smoothness bound {:.3e}", ell * half_sq));
            }
        }
    }
    // weak duality on random dual/primal pairs
    for problem in [quadratic2(), paper1d()] {
        for _ in 0..100 {
            let v_hat = rng.vector(problem.v_dim(), -2.0, 2.0);
            let alpha_hat = rng.vector(problem.constraint_dim(), -2.0, 2.0);
            match problem.duality_gap(&v_hat, &alpha_hat) {
                Ok(gap) if gap >= -1e-10 => {}
                Ok(gap) => failures.push(format!("duality gap {gap:.3e} < -1e-10")),
                Err(e) => failures.push(format!("duality gap failed: {e}")),
            }
        }
    }
    failures.truncate(5);
    verdict(8, "function-analysis properties", &failures);
}

#[test]
fn criterion_09_sublinear_theta_zero() {
    let mut failures = Vec::new();
    for problem in [quadratic2(), paper1d()] {
        let rho = (problem.lambda_g() * problem.phi.smoothness()).sqrt();
        let cfg = build(&problem, Algorithm::Standard, rho, 0.0, 500);
        let traj = solvers::run(&problem, &cfg, &StartPoint::default_for(&problem)).unwrap();
        let opt = problem.optimum.as_ref().unwrap();
        let rows = certificate_rows(&traj, &problem, &cfg, &opt.alpha, &opt.v, 0.0).unwrap();
        let gaps = check_certificates(&rows, 0.0);
        let bregman = corollary_bregman_check(&traj, &problem, &cfg, 0.0).unwrap();
        if !gaps.pass {
            let v = gaps.first_violation.unwrap();
            failures.push(format!(
                "{}-dim problem: unweighted {} violated at t={} (slack {:.2e})",
                problem.w_dim(),
                v.family,
                v.index,
                v.slack
            ));
        }
        if !bregman.pass {
            let v = bregman.first_violation.unwrap();
            failures.push(format!(
                "{}-dim problem: unweighted {} violated at T={} (slack {:.2e})",
                problem.w_dim(),
                v.family,
                v.index,
                v.slack
            ));
        }
    }
    verdict(9, "sublinear theta=0 bound", &failures);
}

#[test]
fn criterion_10_determinism() {
    let mut failures = Vec::new();
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{"problem": {"kind": "paper1d", "gamma": 0.1, "lambda": 0.2, "mu": 0.2},
            "solver": {"rho": 1.4142135623730951, "iters": 200}}"#,
    )
    .unwrap();
    let out1 = dir.path().join("run1.csv");
    let out2 = dir.path().join("run2.csv");
    cli::cmd_solve(&config_path, &SolveOverrides::default(), &out1).unwrap();
    cli::cmd_solve(&config_path, &SolveOverrides::default(), &out2).unwrap();
    let bytes1 = std::fs::read(&out1).unwrap();
    let bytes2 = std::fs::read(&out2).unwrap();
    if bytes1 != bytes2 {
        failures.push("identical config produced different trajectory CSV bytes".into());
    }
    if bytes1.is_empty() {
        failures.push("trajectory CSV is empty".into());
    }
    verdict(10, "determinism", &failures);
}

//! Pilot run: barrier-policy Monte Carlo against the closed-form value at a
//! few step sizes. Useful when tuning simulation settings.

use std::time::Instant;

use harvest::analytic;
use harvest::model::{ComponentDynamics, DiffusionSpec, PriceFn, PriceSpec, ProblemSpec};
use harvest::policy::{ComponentPolicy, Policy};
use harvest::sim::{monte_carlo, SimConfig};

fn main() {
    let spec = ProblemSpec::new(
        DiffusionSpec::new(vec![ComponentDynamics::ArithmeticBm { mu: 1.0, sigma: 1.0 }]).unwrap(),
        PriceSpec::new(0.1, vec![PriceFn::PowerHalf { theta: 1.0 }]).unwrap(),
    )
    .unwrap();
    let sol = analytic::solve(&spec).unwrap();
    let x_star = sol.components[0].x_star().unwrap();
    let phi = sol.value(0.0, &[1.0]).unwrap();
    println!("x* = {x_star}, analytic value at x0=1: {phi}");

    let args: Vec<String> = std::env::args().collect();
    let n_paths: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(20_000);

    // exact value of the barrier-at-b policy from x0 = 1:
    // theta u(1) b^{-1/2} / u'(b)
    let l = harvest::analytic::lambda_roots(1.0, 1.0, 0.1).unwrap();
    let u = |x: f64| (l.lambda1 * x).exp() - (l.lambda2 * x).exp();
    let up = |x: f64| l.lambda1 * (l.lambda1 * x).exp() - l.lambda2 * (l.lambda2 * x).exp();
    for scale in [1.0, 1.5] {
        let b = scale * x_star;
        let v_b = u(1.0) / (b.sqrt() * up(b));
        let policy = Policy::uniform(1, ComponentPolicy::Barrier { x_star: b }).unwrap();
        println!("barrier {scale} x* = {b:.6}, exact policy value {v_b:.6}");
        for dt in [4e-3, 2e-3, 1e-3] {
            let cfg = SimConfig {
                dt,
                t_max: 100.0,
                n_paths,
                seed: 20240810,
                ..SimConfig::default()
            };
            let t0 = Instant::now();
            let est = monte_carlo(&spec, &policy, &[1.0], 0.0, &cfg).unwrap();
            let dtime = t0.elapsed().as_secs_f64();
            let bias = est.mean - v_b;
            println!(
                "  dt={dt:>6}: mean={:.6} se={:.6} bias={:+.6} ({:+.2} se) sd={:.4} [{dtime:.1}s]",
                est.mean,
                est.std_error,
                bias,
                bias / est.std_error,
                est.std_error * (est.n_paths as f64).sqrt(),
            );
        }
    }
}

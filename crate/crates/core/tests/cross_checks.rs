//! Cross-module checks: Monte Carlo estimates of concrete policies against
//! the closed-form values and the analytic bounds.

use harvest::analytic;
use harvest::bounds::bounds_report;
use harvest::model::{ComponentDynamics, DiffusionSpec, PriceFn, PriceSpec, ProblemSpec};
use harvest::policy::{ComponentPolicy, Policy};
use harvest::sim::{monte_carlo, SimConfig};

fn bm_spec_1d(mu: f64, sigma: f64, rho: f64, theta: f64) -> ProblemSpec {
    ProblemSpec::new(
        DiffusionSpec::new(vec![ComponentDynamics::ArithmeticBm { mu, sigma }]).unwrap(),
        PriceSpec::new(rho, vec![PriceFn::PowerHalf { theta }]).unwrap(),
    )
    .unwrap()
}

fn logistic_spec(mu: f64, k: f64, sigma: f64, rho: f64) -> ProblemSpec {
    ProblemSpec::new(
        DiffusionSpec::new(vec![ComponentDynamics::Logistic {
            mu,
            carrying_capacity: k,
            sigma,
        }])
        .unwrap(),
        PriceSpec::new(rho, vec![PriceFn::PowerHalf { theta: 1.0 }]).unwrap(),
    )
    .unwrap()
}

#[test]
fn barrier_mc_tracks_analytic_value_under_dt_refinement() {
    let spec = bm_spec_1d(1.0, 1.0, 0.1, 1.0);
    let sol = analytic::solve(&spec).unwrap();
    let x_star = sol.components[0].x_star().unwrap();
    let phi = sol.value(0.0, &[1.0]).unwrap();
    let policy = Policy::uniform(1, ComponentPolicy::Barrier { x_star }).unwrap();

    let mut cis: Vec<(f64, f64)> = Vec::new();
    for dt in [4e-3, 2e-3, 1e-3] {
        let cfg = SimConfig {
            dt,
            t_max: 80.0,
            n_paths: 8_000,
            seed: 11,
            ..SimConfig::default()
        };
        let est = monte_carlo(&spec, &policy, &[1.0], 0.0, &cfg).unwrap();
        // the estimate must be statistically consistent with the closed form
        assert!(
            (est.mean - phi).abs() <= 3.5 * est.std_error,
            "dt={dt}: mean {} vs phi {phi} (se {})",
            est.mean,
            est.std_error
        );
        cis.push(est.ci95);
    }
    // successive confidence intervals overlap (no runaway dt bias)
    for w in cis.windows(2) {
        let (a, b) = (w[0], w[1]);
        assert!(a.0 <= b.1 && b.0 <= a.1, "CIs do not overlap: {a:?} vs {b:?}");
    }
}

#[test]
fn chattering_dominates_take_all_in_chatter_regime() {
    let spec = bm_spec_1d(0.1, 1.0, 0.1, 1.0);
    let cfg = SimConfig {
        n_paths: 32,
        t_max: 1.0,
        ..SimConfig::default()
    };
    let chatter = Policy::uniform(1, ComponentPolicy::Chattering { m: 10_000, eta: 0.0 }).unwrap();
    let take_all = Policy::uniform(1, ComponentPolicy::TakeAll).unwrap();
    let c = monte_carlo(&spec, &chatter, &[2.0], 0.0, &cfg).unwrap();
    let t = monte_carlo(&spec, &take_all, &[2.0], 0.0, &cfg).unwrap();
    assert!(
        c.mean >= t.mean - 2.0 * (c.std_error + t.std_error),
        "chattering {} should dominate take-all {}",
        c.mean,
        t.mean
    );
    // both are deterministic here, so the gap is the full factor of ~2
    assert!(c.mean > 1.9 * t.mean);
}

#[test]
fn bounds_sandwich_holds_for_simulated_policies() {
    // interior-threshold component: lower and conservative upper must
    // bracket every implemented policy's estimate
    let spec = bm_spec_1d(1.0, 1.0, 0.1, 1.0);
    let report = bounds_report(&spec, &[1.0], None).unwrap();
    let sol = analytic::solve(&spec).unwrap();
    let x_star = sol.components[0].x_star().unwrap();
    let cfg = SimConfig {
        dt: 2e-3,
        t_max: 60.0,
        n_paths: 3_000,
        seed: 5,
        ..SimConfig::default()
    };
    let policies = [
        Policy::uniform(1, ComponentPolicy::TakeAll).unwrap(),
        Policy::uniform(1, ComponentPolicy::Chattering { m: 10_000, eta: 0.0 }).unwrap(),
        Policy::uniform(1, ComponentPolicy::Barrier { x_star }).unwrap(),
        Policy::uniform(1, ComponentPolicy::NoHarvest).unwrap(),
    ];
    for policy in &policies {
        let est = monte_carlo(&spec, policy, &[1.0], 0.0, &cfg).unwrap();
        assert!(
            est.mean <= report.upper_conservative + 2.0 * est.std_error,
            "{}: {} above upper bound {}",
            policy.id(),
            est.mean,
            report.upper_conservative
        );
    }
    // the chattering policy approaches the lower bound from below (the
    // left-priced Riemann sum is ~0.7% short at m = 1e4)
    let chatter = monte_carlo(&spec, &policies[1], &[1.0], 0.0, &cfg).unwrap();
    assert!(chatter.mean >= report.lower * 0.99 - 2.0 * chatter.std_error);
    // and the optimal barrier estimate sits strictly inside the bracket
    let barrier = monte_carlo(&spec, &policies[2], &[1.0], 0.0, &cfg).unwrap();
    assert!(barrier.mean > report.lower && barrier.mean < report.upper_conservative);
}

#[test]
fn logistic_barrier_mc_tracks_analytic_value() {
    let spec = logistic_spec(1.0, 1.0, 0.5, 0.1);
    let sol = analytic::solve(&spec).unwrap();
    let x_star = sol.components[0].x_star().unwrap();
    let v = sol.value(0.0, &[0.2]).unwrap();
    let policy = Policy::uniform(1, ComponentPolicy::Barrier { x_star }).unwrap();
    let cfg = SimConfig {
        dt: 1e-3,
        t_max: 60.0,
        n_paths: 5_000,
        seed: 17,
        ..SimConfig::default()
    };
    let est = monte_carlo(&spec, &policy, &[0.2], 0.0, &cfg).unwrap();
    assert!(
        (est.mean - v).abs() <= 4.0 * est.std_error,
        "mean {} vs analytic {v} (se {})",
        est.mean,
        est.std_error
    );
}

#[test]
fn mixed_regime_value_is_additive_across_components() {
    // component 0 in the interior-threshold regime, component 1 chattering;
    // the closed-form value is the sum of the one-component values
    let mixed = ProblemSpec::new(
        DiffusionSpec::new(vec![
            ComponentDynamics::ArithmeticBm { mu: 1.0, sigma: 1.0 },
            ComponentDynamics::ArithmeticBm { mu: 0.1, sigma: 1.0 },
        ])
        .unwrap(),
        PriceSpec::new(
            0.1,
            vec![
                PriceFn::PowerHalf { theta: 1.0 },
                PriceFn::PowerHalf { theta: 1.0 },
            ],
        )
        .unwrap(),
    )
    .unwrap();
    let sol = analytic::solve(&mixed).unwrap();
    let v = sol.value(0.0, &[1.0, 4.0]).unwrap();
    let one = analytic::solve(&bm_spec_1d(1.0, 1.0, 0.1, 1.0)).unwrap();
    let v0 = one.value(0.0, &[1.0]).unwrap();
    assert!((v - (v0 + 4.0)).abs() < 1e-12, "additivity: {v} vs {v0} + 4");
}

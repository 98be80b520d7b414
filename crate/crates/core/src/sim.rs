//! Euler-Maruyama path simulation of the controlled diffusions with
//! extinction detection, discounted-yield accumulation, and Monte Carlo
//! estimation of the expected yield of a fixed strategy.
//!
//! Reproducibility contract: every Gaussian increment is keyed by
//! `(seed, path index, step index)`, paths are aggregated by pairwise
//! summation in path order, and therefore an estimate depends only on
//! `(seed, config, spec, policy)` -- never on worker count or scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ComponentDynamics, PriceFn, ProblemSpec, StateFn};
use crate::policy::{Lump, LumpKind, Policy, PolicyProgress};
use crate::rng::PathRng;

/// Discretization scheme. Euler-Maruyama is the only implemented option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
}

/// How scheduled lumps are priced.
///
/// `LeftPrice` values a lump at the pre-lump state's price, the defining
/// convention of the yield functional for jump strategies. `IntegralPrice`
/// values it by the exact price integral along the jump, the chattering
/// limit device. Barrier projection lumps always use the integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LumpPricing {
    LeftPrice,
    IntegralPrice,
}

/// When the system counts as extinct.
///
/// `Joint` kills the whole family as soon as any component reaches zero
/// (the two-population convention). `PerComponent` absorbs each component
/// at zero on its own clock (the scalar logistic convention). `Auto`
/// resolves to `Joint` for multi-component pure-Brownian specs and
/// `PerComponent` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtinctionMode {
    Auto,
    Joint,
    PerComponent,
}

/// Simulation settings.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_max: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub lump_pricing: LumpPricing,
    pub extinction: ExtinctionMode,
    /// Detect intra-step crossings of zero with the Brownian-bridge
    /// probability instead of relying on grid-point signs alone. Without it
    /// the scheme systematically under-detects extinction by an
    /// O(sqrt(dt)) boundary shift.
    pub bridge_extinction: bool,
    /// Record every k-th step of the trajectory into the path result.
    pub record_every: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            t_max: 100.0,
            n_paths: 10_000,
            seed: 1,
            scheme: Scheme::EulerMaruyama,
            lump_pricing: LumpPricing::LeftPrice,
            extinction: ExtinctionMode::Auto,
            bridge_extinction: true,
            record_every: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !self.t_max.is_finite() || self.t_max < self.dt {
            return Err(Error::invalid(
                "t_max",
                format!("must be >= dt, got {} (dt = {})", self.t_max, self.dt),
            ));
        }
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths", "must be >= 1"));
        }
        Ok(())
    }

    /// Resolve `Auto` extinction against the spec.
    pub fn resolved_extinction(&self, spec: &ProblemSpec) -> ExtinctionMode {
        match self.extinction {
            ExtinctionMode::Auto => {
                if spec.n_components() > 1 && spec.all_arithmetic_bm() {
                    ExtinctionMode::Joint
                } else {
                    ExtinctionMode::PerComponent
                }
            }
            other => other,
        }
    }
}

/// Outcome of one simulated path.
#[derive(Debug, Clone, Serialize)]
pub struct PathResult {
    pub discounted_yield: f64,
    /// Absolute extinction time of the whole system; `None` when censored
    /// at `t_max`.
    pub extinction_time: Option<f64>,
    pub cumulative_harvest: Vec<f64>,
    pub samples: Option<Vec<(f64, Vec<f64>)>>,
    /// `false` when the state exploded to a non-finite value; such paths
    /// are excluded from estimates and counted.
    pub valid: bool,
}

/// Monte Carlo estimate with a normal-approximation confidence interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub ci95: (f64, f64),
    pub n_invalid: usize,
}

const Z95: f64 = 1.959963984540054;

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn estimate_from(values: &[f64], n_invalid: usize) -> Result<MCEstimate> {
    if values.is_empty() {
        return Err(Error::Estimation("all paths were invalid".into()));
    }
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    let sq: Vec<f64> = values.iter().map(|y| (y - mean) * (y - mean)).collect();
    let var = if n > 1 {
        pairwise_sum(&sq) / (n - 1) as f64
    } else {
        0.0
    };
    let std_error = (var / n as f64).sqrt();
    Ok(MCEstimate {
        mean,
        std_error,
        n_paths: n,
        ci95: (mean - Z95 * std_error, mean + Z95 * std_error),
        n_invalid,
    })
}

enum StepCoef {
    Bm { mu_dt: f64, sig_sqdt: f64 },
    Logistic { mu: f64, inv_k: f64, sigma: f64 },
    General { drift: StateFn, vol: StateFn },
}

impl StepCoef {
    fn build(d: &ComponentDynamics, dt: f64) -> StepCoef {
        let sqdt = dt.sqrt();
        match d {
            ComponentDynamics::ArithmeticBm { mu, sigma } => StepCoef::Bm {
                mu_dt: mu * dt,
                sig_sqdt: sigma * sqdt,
            },
            ComponentDynamics::Logistic {
                mu,
                carrying_capacity,
                sigma,
            } => StepCoef::Logistic {
                mu: *mu,
                inv_k: 1.0 / carrying_capacity,
                sigma: *sigma,
            },
            ComponentDynamics::General { drift, vol } => StepCoef::General {
                drift: drift.clone(),
                vol: vol.clone(),
            },
        }
    }

    /// `sigma_i(x)^2 dt` for the bridge crossing probability.
    #[inline]
    fn vol2_dt(&self, x: f64, dt: f64) -> f64 {
        match self {
            StepCoef::Bm { sig_sqdt, .. } => sig_sqdt * sig_sqdt,
            StepCoef::Logistic { sigma, .. } => {
                let v = sigma * x;
                v * v * dt
            }
            StepCoef::General { vol, .. } => {
                let v = vol(x);
                v * v * dt
            }
        }
    }

    #[inline]
    fn step(&self, x: f64, z: f64, dt: f64, sqdt: f64) -> f64 {
        match self {
            StepCoef::Bm { mu_dt, sig_sqdt } => x + mu_dt + sig_sqdt * z,
            StepCoef::Logistic { mu, inv_k, sigma } => {
                x + mu * x * (1.0 - inv_k * x) * dt + sigma * x * sqdt * z
            }
            StepCoef::General { drift, vol } => x + drift(x) * dt + vol(x) * sqdt * z,
        }
    }
}

#[inline]
fn lump_value(price: &PriceFn, kind: LumpKind, mode: LumpPricing, pre: f64, amount: f64) -> Result<f64> {
    if amount <= 0.0 {
        return Ok(0.0);
    }
    match (kind, mode) {
        (LumpKind::Scheduled, LumpPricing::LeftPrice) => Ok(price.eval(pre) * amount),
        _ => price.integral((pre - amount).max(0.0), pre),
    }
}

/// Simulate one controlled path.
///
/// The policy's immediate actions (take-all, chattering with `eta = 0`,
/// the initial chatter down to a barrier) execute at `t = s` before any
/// diffusion; afterwards each Euler step applies the diffusion increment
/// first and policy-driven harvesting second. A component that reaches
/// zero is extinct; depending on the extinction mode this ends the whole
/// path or only that component. Crossing times are interpolated linearly
/// within the step for the extinction discount.
pub fn simulate_path(
    spec: &ProblemSpec,
    policy: &Policy,
    x0: &[f64],
    s: f64,
    config: &SimConfig,
    path_index: u64,
) -> Result<PathResult> {
    config.validate()?;
    let n = spec.n_components();
    if policy.components.len() != n || x0.len() != n {
        return Err(Error::invalid(
            "policy/x0",
            format!(
                "component counts disagree: spec {n}, policy {}, x0 {}",
                policy.components.len(),
                x0.len()
            ),
        ));
    }
    for &xi in x0 {
        if !xi.is_finite() || xi <= 0.0 {
            return Err(Error::Domain(format!(
                "initial state must be componentwise > 0, got {xi}"
            )));
        }
    }
    if !s.is_finite() || s < 0.0 {
        return Err(Error::invalid("s", format!("must be >= 0, got {s}")));
    }
    let joint = matches!(
        config.resolved_extinction(spec),
        ExtinctionMode::Joint
    );
    let rho = spec.prices.rho();
    let dt = config.dt;
    let sqdt = dt.sqrt();
    let disc_step = (-rho * dt).exp();
    let n_steps = (config.t_max / dt).ceil() as usize;

    let rng = PathRng::new(config.seed, path_index);
    let prices = spec.prices.components();
    let coefs: Vec<StepCoef> = spec
        .dynamics
        .components()
        .iter()
        .map(|d| StepCoef::build(d, dt))
        .collect();

    let mut state: Vec<f64> = x0.to_vec();
    let mut alive: Vec<bool> = vec![true; n];
    let mut progress: Vec<PolicyProgress> = policy
        .components
        .iter()
        .zip(x0)
        .map(|(p, &x)| p.start(x))
        .collect();
    let mut cumulative = vec![0.0f64; n];
    let mut death_time = vec![f64::NAN; n];
    let mut n_alive = n;
    let mut discounted_yield = 0.0f64;
    let mut disc = (-rho * s).exp();
    let mut valid = true;
    let mut samples: Option<Vec<(f64, Vec<f64>)>> = config.record_every.map(|_| Vec::new());

    // Harvest everything due up to w_hi for component i. Returns false when
    // the component died (harvested to zero).
    macro_rules! drain {
        ($i:expr, $w_hi:expr, $disc_at_hi:expr) => {{
            let i = $i;
            let w_hi: f64 = $w_hi;
            let mut comp_alive = true;
            while let Some(Lump { amount, at, kind }) =
                policy.components[i].next_lump(&mut progress[i], state[i], w_hi)
            {
                debug_assert!(amount >= 0.0 && amount <= state[i] + 1e-12);
                let value = lump_value(&prices[i], kind, config.lump_pricing, state[i], amount)?;
                debug_assert!(value >= 0.0);
                let factor = if at == w_hi {
                    $disc_at_hi
                } else {
                    (-rho * (s + at)).exp()
                };
                discounted_yield += factor * value;
                state[i] -= amount;
                cumulative[i] += amount;
                if state[i] <= 0.0 {
                    state[i] = 0.0;
                    death_time[i] = s + at;
                    comp_alive = false;
                    break;
                }
            }
            comp_alive
        }};
    }

    // immediate actions at t = s
    for i in 0..n {
        if alive[i] && !drain!(i, 0.0, disc) {
            alive[i] = false;
            n_alive -= 1;
        }
    }
    if joint && n_alive < n && n_alive > 0 {
        // one death kills the family
        let t = death_time.iter().cloned().find(|t| !t.is_nan()).unwrap();
        for i in 0..n {
            if alive[i] {
                alive[i] = false;
                death_time[i] = t;
            }
        }
        n_alive = 0;
    }
    if let Some(buf) = samples.as_mut() {
        buf.push((s, state.clone()));
    }

    let mut step = 0usize;
    while n_alive > 0 && step < n_steps {
        let t_rel_end = (step + 1) as f64 * dt;
        disc *= disc_step;
        let mut joint_death: Option<f64> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let x_pre = state[i];
            let z = rng.normal((step * n + i) as u64);
            let x_post = coefs[i].step(x_pre, z, dt, sqdt);
            if !x_post.is_finite() {
                valid = false;
                break;
            }
            if x_post <= 0.0 {
                // linear interpolation of the crossing inside the step
                let frac = x_pre / (x_pre - x_post);
                let t_cross = s + (step as f64 + frac) * dt;
                state[i] = 0.0;
                alive[i] = false;
                n_alive -= 1;
                death_time[i] = t_cross;
                if joint {
                    joint_death = joint_death
                        .map(|t: f64| t.min(t_cross))
                        .or(Some(t_cross));
                }
                continue;
            }
            if config.bridge_extinction {
                // both endpoints positive; an excursion through zero inside
                // the step is detected with its Brownian-bridge probability
                let v2dt = coefs[i].vol2_dt(x_pre, dt);
                if x_pre * x_post < 20.0 * v2dt {
                    let p = (-2.0 * x_pre * x_post / v2dt).exp();
                    if rng.uniform_aux((step * n + i) as u64) < p {
                        let t_cross = s + (step as f64 + 0.5) * dt;
                        state[i] = 0.0;
                        alive[i] = false;
                        n_alive -= 1;
                        death_time[i] = t_cross;
                        if joint {
                            joint_death = joint_death
                                .map(|t: f64| t.min(t_cross))
                                .or(Some(t_cross));
                        }
                        continue;
                    }
                }
            }
            state[i] = x_post;
            debug_assert!(state[i] > 0.0);
            if !drain!(i, t_rel_end, disc) {
                alive[i] = false;
                n_alive -= 1;
                if joint {
                    joint_death = joint_death
                        .map(|t: f64| t.min(death_time[i]))
                        .or(Some(death_time[i]));
                }
            }
        }
        if !valid {
            break;
        }
        if joint {
            if let Some(t) = joint_death {
                for i in 0..n {
                    if alive[i] {
                        alive[i] = false;
                        death_time[i] = t;
                    } else if death_time[i].is_nan() || death_time[i] > t {
                        death_time[i] = t;
                    }
                }
                n_alive = 0;
            }
        }
        step += 1;
        if let Some(every) = config.record_every {
            if step % every == 0 || n_alive == 0 {
                samples.as_mut().unwrap().push((s + step as f64 * dt, state.clone()));
            }
        }
    }

    let extinction_time = if n_alive == 0 && valid {
        Some(
            death_time
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max),
        )
    } else {
        None
    };

    Ok(PathResult {
        discounted_yield,
        extinction_time,
        cumulative_harvest: cumulative,
        samples,
        valid,
    })
}

fn run_paths<T, F>(config: &SimConfig, per_path: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (0..config.n_paths as u64)
        .into_par_iter()
        .map(&per_path)
        .collect()
}

/// Estimate the expected discounted yield of `policy` from `x0` at time `s`.
pub fn monte_carlo(
    spec: &ProblemSpec,
    policy: &Policy,
    x0: &[f64],
    s: f64,
    config: &SimConfig,
) -> Result<MCEstimate> {
    let mut cfg = *config;
    cfg.record_every = None;
    let results = run_paths(&cfg, |k| {
        simulate_path(spec, policy, x0, s, &cfg, k).map(|p| (p.discounted_yield, p.valid))
    })?;
    let values: Vec<f64> = results
        .iter()
        .filter(|(_, ok)| *ok)
        .map(|(y, _)| *y)
        .collect();
    estimate_from(&values, results.len() - values.len())
}

/// One-pass policy evaluation: the yield estimate together with extinction
/// statistics from the same paths.
#[derive(Debug, Clone, Serialize)]
pub struct PolicySummary {
    pub yield_estimate: MCEstimate,
    pub extinct_fraction: f64,
    pub censored_fraction: f64,
    /// Mean of `e^{-rho T}` with censored paths at `e^{-rho t_max}`.
    pub extinction_discount_as_is: f64,
    /// Same mean with censored paths contributing zero.
    pub extinction_discount_as_zero: f64,
}

pub fn policy_summary(
    spec: &ProblemSpec,
    policy: &Policy,
    x0: &[f64],
    s: f64,
    config: &SimConfig,
) -> Result<PolicySummary> {
    let mut cfg = *config;
    cfg.record_every = None;
    let rho = spec.prices.rho();
    let results = run_paths(&cfg, |k| {
        simulate_path(spec, policy, x0, s, &cfg, k)
            .map(|p| (p.discounted_yield, p.extinction_time, p.valid))
    })?;
    let values: Vec<f64> = results
        .iter()
        .filter(|(_, _, ok)| *ok)
        .map(|(y, _, _)| *y)
        .collect();
    let yield_estimate = estimate_from(&values, results.len() - values.len())?;
    let n_valid = values.len() as f64;
    let mut extinct = 0usize;
    let mut disc_as_is = Vec::with_capacity(values.len());
    let mut disc_as_zero_sum = 0.0;
    for (_, t, ok) in &results {
        if !ok {
            continue;
        }
        match t {
            Some(t) => {
                extinct += 1;
                let d = (-rho * t).exp();
                disc_as_is.push(d);
                disc_as_zero_sum += d;
            }
            None => disc_as_is.push((-rho * (s + cfg.t_max)).exp()),
        }
    }
    Ok(PolicySummary {
        yield_estimate,
        extinct_fraction: extinct as f64 / n_valid,
        censored_fraction: 1.0 - extinct as f64 / n_valid,
        extinction_discount_as_is: pairwise_sum(&disc_as_is) / n_valid,
        extinction_discount_as_zero: disc_as_zero_sum / n_valid,
    })
}

/// Monte Carlo estimate of the extinction discount `E[e^{-rho T}]` from
/// `x0` at `s = 0`, with the censoring bracket made explicit.
#[derive(Debug, Clone, Serialize)]
pub struct ExtinctionDiscount {
    /// Censored paths contribute `e^{-rho t_max}` (upper end of the true
    /// per-path discount).
    pub censored_as_is: MCEstimate,
    /// Mean when censored paths contribute zero instead (lower end).
    pub censored_as_zero_mean: f64,
    pub censored_fraction: f64,
}

pub fn estimate_extinction_discount(
    spec: &ProblemSpec,
    policy: &Policy,
    x0: &[f64],
    config: &SimConfig,
) -> Result<ExtinctionDiscount> {
    let mut cfg = *config;
    cfg.record_every = None;
    let rho = spec.prices.rho();
    let results = run_paths(&cfg, |k| {
        simulate_path(spec, policy, x0, 0.0, &cfg, k).map(|p| (p.extinction_time, p.valid))
    })?;
    let mut as_is = Vec::with_capacity(results.len());
    let mut as_zero = Vec::with_capacity(results.len());
    let mut censored = 0usize;
    let mut invalid = 0usize;
    for (t, ok) in &results {
        if !ok {
            invalid += 1;
            continue;
        }
        match t {
            Some(t) => {
                let d = (-rho * t).exp();
                as_is.push(d);
                as_zero.push(d);
            }
            None => {
                censored += 1;
                as_is.push((-rho * cfg.t_max).exp());
                as_zero.push(0.0);
            }
        }
    }
    let n_valid = as_is.len();
    let censored_as_is = estimate_from(&as_is, invalid)?;
    Ok(ExtinctionDiscount {
        censored_as_is,
        censored_as_zero_mean: pairwise_sum(&as_zero) / n_valid as f64,
        censored_fraction: censored as f64 / n_valid as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiffusionSpec, PriceSpec};
    use crate::policy::ComponentPolicy;
    use std::sync::Arc;

    fn assert_close(got: f64, want: f64, tol: f64, msg: &str) {
        let diff = (got - want).abs();
        assert!(
            diff <= tol * want.abs().max(1.0),
            "{msg}: got {got}, want {want}, diff {diff}"
        );
    }

    fn bm_spec_2d(mu: f64, sigma: f64, rho: f64, thetas: (f64, f64)) -> ProblemSpec {
        let dynamics = DiffusionSpec::new(vec![
            ComponentDynamics::ArithmeticBm { mu, sigma },
            ComponentDynamics::ArithmeticBm { mu, sigma },
        ])
        .unwrap();
        let prices = PriceSpec::new(
            rho,
            vec![
                PriceFn::PowerHalf { theta: thetas.0 },
                PriceFn::PowerHalf { theta: thetas.1 },
            ],
        )
        .unwrap();
        ProblemSpec::new(dynamics, prices).unwrap()
    }

    fn quick_config(n_paths: usize) -> SimConfig {
        SimConfig {
            dt: 1e-3,
            t_max: 2.0,
            n_paths,
            seed: 7,
            ..SimConfig::default()
        }
    }

    #[test]
    fn take_all_is_exact_and_deterministic() {
        // theta = (1, 1), x = (1, 4): yield = 1*sqrt(1) + 1*sqrt(4) = 3 on
        // every path, with no diffusion before the lump
        let spec = bm_spec_2d(0.1, 1.0, 0.1, (1.0, 1.0));
        let policy = Policy::uniform(2, ComponentPolicy::TakeAll).unwrap();
        let est = monte_carlo(&spec, &policy, &[1.0, 4.0], 0.0, &quick_config(50)).unwrap();
        assert_eq!(est.mean, 3.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.n_paths, 50);
        // discounting at s > 0
        let p = simulate_path(&spec, &policy, &[1.0, 4.0], 2.0, &quick_config(1), 0).unwrap();
        assert_close(p.discounted_yield, 3.0 * (-0.2f64).exp(), 1e-14, "s=2");
        assert_eq!(p.extinction_time, Some(2.0));
    }

    #[test]
    fn no_harvest_yields_zero() {
        let spec = bm_spec_2d(0.1, 1.0, 0.1, (1.0, 1.0));
        let policy = Policy::uniform(2, ComponentPolicy::NoHarvest).unwrap();
        let est = monte_carlo(&spec, &policy, &[1.0, 4.0], 0.0, &quick_config(20)).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn instant_chattering_approaches_double_sqrt() {
        // m = 1e4 lumps at frozen time: deterministic, within 1% of
        // 2 (theta1 sqrt(x1) + theta2 sqrt(x2)) = 6
        let spec = bm_spec_2d(0.1, 1.0, 0.1, (1.0, 1.0));
        let policy =
            Policy::uniform(2, ComponentPolicy::Chattering { m: 10_000, eta: 0.0 }).unwrap();
        let est = monte_carlo(&spec, &policy, &[1.0, 4.0], 0.0, &quick_config(10)).unwrap();
        // identical paths up to the one-ulp noise of the mean itself
        assert!(est.std_error < 1e-12, "se {}", est.std_error);
        assert!((est.mean - 6.0).abs() / 6.0 < 0.01, "mean {}", est.mean);
        // frozen left-Riemann value (oracle: closed-form sum)
        let m = 10_000u32;
        let factor: f64 = (1..=m)
            .map(|j| 1.0 / ((j as f64 / m as f64).sqrt() * m as f64))
            .sum();
        assert_close(est.mean, factor * 3.0, 1e-9, "left sum");
    }

    #[test]
    fn instant_chattering_integral_mode_is_exact() {
        let spec = bm_spec_2d(0.1, 1.0, 0.1, (1.0, 1.0));
        let policy = Policy::uniform(2, ComponentPolicy::Chattering { m: 100, eta: 0.0 }).unwrap();
        let cfg = SimConfig {
            lump_pricing: LumpPricing::IntegralPrice,
            ..quick_config(5)
        };
        let est = monte_carlo(&spec, &policy, &[1.0, 4.0], 0.0, &cfg).unwrap();
        // telescoping: the integral mode gives exactly 2 sum theta sqrt(x)
        assert_close(est.mean, 6.0, 1e-12, "integral chatter");
    }

    #[test]
    fn reproducible_given_seed() {
        let spec = bm_spec_2d(1.0, 1.0, 0.1, (1.0, 1.0));
        let policy = Policy::uniform(2, ComponentPolicy::Barrier { x_star: 1.5 }).unwrap();
        let cfg = SimConfig {
            n_paths: 64,
            t_max: 1.0,
            ..SimConfig::default()
        };
        let a = monte_carlo(&spec, &policy, &[1.0, 1.0], 0.0, &cfg).unwrap();
        let b = monte_carlo(&spec, &policy, &[1.0, 1.0], 0.0, &cfg).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let cfg2 = SimConfig { seed: 8, ..cfg };
        let c = monte_carlo(&spec, &policy, &[1.0, 1.0], 0.0, &cfg2).unwrap();
        assert_ne!(a.mean.to_bits(), c.mean.to_bits());
    }

    #[test]
    fn harvest_monotone_and_state_nonnegative_along_paths() {
        let spec = bm_spec_2d(1.0, 1.0, 0.1, (1.0, 1.0));
        let policy = Policy::new(vec![
            ComponentPolicy::Barrier { x_star: 1.2 },
            ComponentPolicy::Chattering { m: 50, eta: 0.5 },
        ])
        .unwrap();
        let cfg = SimConfig {
            n_paths: 1,
            t_max: 1.5,
            record_every: Some(10),
            ..SimConfig::default()
        };
        for k in 0..16 {
            let p = simulate_path(&spec, &policy, &[1.0, 1.0], 0.0, &cfg, k).unwrap();
            assert!(p.valid);
            assert!(p.discounted_yield >= 0.0);
            for s in p.samples.as_ref().unwrap() {
                for &x in &s.1 {
                    assert!(x >= 0.0, "state went negative: {x}");
                }
            }
            assert!(p.cumulative_harvest.iter().all(|&h| h >= 0.0));
        }
    }

    #[test]
    fn general_dynamics_match_equivalent_bm() {
        // a General spec encoding the same constants must reproduce the
        // ArithmeticBm paths bit for bit
        let bm = bm_spec_2d(0.5, 0.8, 0.1, (1.0, 1.0));
        let general = ProblemSpec::new(
            DiffusionSpec::new(vec![
                ComponentDynamics::General {
                    drift: Arc::new(|_| 0.5),
                    vol: Arc::new(|_| 0.8),
                },
                ComponentDynamics::General {
                    drift: Arc::new(|_| 0.5),
                    vol: Arc::new(|_| 0.8),
                },
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
        let policy = Policy::uniform(2, ComponentPolicy::Barrier { x_star: 1.4 }).unwrap();
        let cfg = SimConfig {
            n_paths: 8,
            t_max: 0.5,
            ..SimConfig::default()
        };
        let a = monte_carlo(&bm, &policy, &[1.0, 1.0], 0.0, &cfg).unwrap();
        let b = monte_carlo(&general, &policy, &[1.0, 1.0], 0.0, &cfg).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn exploding_paths_are_flagged_and_excluded() {
        let spec = ProblemSpec::new(
            DiffusionSpec::new(vec![ComponentDynamics::General {
                drift: Arc::new(|x| x * x * x * 1e6),
                vol: Arc::new(|x| x),
            }])
            .unwrap(),
            PriceSpec::new(0.1, vec![PriceFn::PowerHalf { theta: 1.0 }]).unwrap(),
        )
        .unwrap();
        let policy = Policy::uniform(1, ComponentPolicy::NoHarvest).unwrap();
        let cfg = SimConfig {
            n_paths: 4,
            t_max: 5.0,
            dt: 0.5,
            ..SimConfig::default()
        };
        let p = simulate_path(&spec, &policy, &[10.0], 0.0, &cfg, 0).unwrap();
        assert!(!p.valid);
        // estimates still work when at least one path survives, and the
        // invalid count is reported
        let est = monte_carlo(&spec, &policy, &[10.0], 0.0, &cfg);
        match est {
            Ok(e) => assert!(e.n_invalid > 0),
            Err(Error::Estimation(_)) => {}
            Err(other) => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn extinction_discount_take_all_is_one() {
        let spec = bm_spec_2d(0.1, 1.0, 0.1, (1.0, 1.0));
        let policy = Policy::uniform(2, ComponentPolicy::TakeAll).unwrap();
        let d =
            estimate_extinction_discount(&spec, &policy, &[1.0, 4.0], &quick_config(10)).unwrap();
        assert_eq!(d.censored_as_is.mean, 1.0);
        assert_eq!(d.censored_fraction, 0.0);
        assert_eq!(d.censored_as_zero_mean, 1.0);
    }

    #[test]
    fn extinction_discount_rare_for_drifting_bm() {
        // no harvesting, strong positive drift far from zero: extinction is
        // rare, the bracket collapses toward the censored values
        let spec = bm_spec_2d(1.0, 0.3, 0.5, (1.0, 1.0));
        let policy = Policy::uniform(2, ComponentPolicy::NoHarvest).unwrap();
        let cfg = SimConfig {
            n_paths: 200,
            t_max: 4.0,
            dt: 1e-2,
            ..SimConfig::default()
        };
        let d = estimate_extinction_discount(&spec, &policy, &[5.0, 5.0], &cfg).unwrap();
        assert!(d.censored_fraction > 0.95);
        let floor = (-0.5f64 * 4.0).exp();
        assert!((d.censored_as_is.mean - floor).abs() < 0.05);
        assert!(d.censored_as_zero_mean <= d.censored_as_is.mean);
    }

    #[test]
    fn joint_extinction_kills_both_components() {
        // strong downward drift sends component 1 to zero almost surely;
        // under joint extinction component 2's harvest stops too
        let dynamics = DiffusionSpec::new(vec![
            ComponentDynamics::ArithmeticBm { mu: -5.0, sigma: 0.1 },
            ComponentDynamics::ArithmeticBm { mu: 0.5, sigma: 0.1 },
        ])
        .unwrap();
        let prices = PriceSpec::new(
            0.1,
            vec![
                PriceFn::PowerHalf { theta: 1.0 },
                PriceFn::PowerHalf { theta: 1.0 },
            ],
        )
        .unwrap();
        let spec = ProblemSpec::new(dynamics, prices).unwrap();
        let policy = Policy::new(vec![
            ComponentPolicy::NoHarvest,
            ComponentPolicy::Barrier { x_star: 1.0 },
        ])
        .unwrap();
        let mut cfg = SimConfig {
            n_paths: 1,
            t_max: 3.0,
            dt: 1e-3,
            extinction: ExtinctionMode::Joint,
            ..SimConfig::default()
        };
        let joint = simulate_path(&spec, &policy, &[1.0, 1.0], 0.0, &cfg, 3).unwrap();
        let t_joint = joint.extinction_time.expect("must go extinct");
        assert!(t_joint < 1.0, "drift -5 from 1.0 dies fast, got {t_joint}");

        cfg.extinction = ExtinctionMode::PerComponent;
        let per = simulate_path(&spec, &policy, &[1.0, 1.0], 0.0, &cfg, 3).unwrap();
        // with per-component absorption, component 2 keeps harvesting after
        // component 1 dies
        assert!(per.discounted_yield > joint.discounted_yield);
        assert_eq!(
            cfg.resolved_extinction(&spec),
            ExtinctionMode::PerComponent
        );
        let auto = SimConfig {
            extinction: ExtinctionMode::Auto,
            ..cfg
        };
        assert_eq!(auto.resolved_extinction(&spec), ExtinctionMode::Joint);
    }

    #[test]
    fn censored_path_has_no_extinction_time() {
        let spec = bm_spec_2d(1.0, 0.2, 0.1, (1.0, 1.0));
        let policy = Policy::uniform(2, ComponentPolicy::NoHarvest).unwrap();
        let p = simulate_path(&spec, &policy, &[5.0, 5.0], 0.0, &quick_config(1), 0).unwrap();
        assert_eq!(p.extinction_time, None);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::default();
        cfg.dt = 0.0;
        assert!(cfg.validate().is_err());
        cfg.dt = 2.0;
        cfg.t_max = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::default();
        cfg.n_paths = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_bad_initial_state() {
        let spec = bm_spec_2d(0.1, 1.0, 0.1, (1.0, 1.0));
        let policy = Policy::uniform(2, ComponentPolicy::TakeAll).unwrap();
        assert!(simulate_path(&spec, &policy, &[0.0, 1.0], 0.0, &quick_config(1), 0).is_err());
        assert!(simulate_path(&spec, &policy, &[1.0], 0.0, &quick_config(1), 0).is_err());
        assert!(simulate_path(&spec, &policy, &[1.0, 1.0], -1.0, &quick_config(1), 0).is_err());
    }
}

//! Closed-form machinery: characteristic roots, harvesting thresholds for
//! the arithmetic-Brownian and logistic models, the piecewise value
//! functions they induce, and (in [`verify`]) a grid check of the
//! verification-theorem conditions.

pub mod verify;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    classify_regime_bm, classify_regime_logistic, ComponentDynamics, PriceFn, ProblemSpec, Regime,
};
use crate::specfun::{psi, psi_derivs, PsiParams};

/// Roots of `-rho + mu l + (sigma^2/2) l^2 = 0`, ordered
/// `lambda1 > 0 > lambda2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LambdaPair {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl LambdaPair {
    /// Worst absolute residual of the defining quadratic over both roots.
    pub fn residual(&self, mu: f64, sigma: f64, rho: f64) -> f64 {
        let q = |l: f64| -rho + mu * l + 0.5 * sigma * sigma * l * l;
        q(self.lambda1).abs().max(q(self.lambda2).abs())
    }
}

/// Characteristic roots for an arithmetic Brownian component.
pub fn lambda_roots(mu: f64, sigma: f64, rho: f64) -> Result<LambdaPair> {
    for (name, v) in [("mu", mu), ("sigma", sigma), ("rho", rho)] {
        if !v.is_finite() {
            return Err(Error::invalid(name, format!("must be finite, got {v}")));
        }
    }
    if sigma == 0.0 {
        return Err(Error::invalid("sigma", "must be nonzero"));
    }
    if rho <= 0.0 {
        return Err(Error::invalid("rho", format!("must be > 0, got {rho}")));
    }
    let s2 = sigma * sigma;
    let disc = (mu * mu + 2.0 * rho * s2).sqrt();
    // whichever root subtracts nearly equal quantities is computed through
    // the conjugate (Vieta) form instead
    let (lambda1, lambda2) = if mu >= 0.0 {
        (2.0 * rho / (mu + disc), -(mu + disc) / s2)
    } else {
        ((-mu + disc) / s2, -2.0 * rho / (-mu + disc))
    };
    Ok(LambdaPair { lambda1, lambda2 })
}

/// Threshold, pasting constants, and residual diagnostics for one
/// interior-threshold arithmetic Brownian component.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdSolution {
    pub x_star: f64,
    pub c_coef: f64,
    pub a_const: f64,
    pub lambda: LambdaPair,
    /// Residuals of the three pasting equations: value match, price match
    /// (first derivative), curvature match (second derivative).
    pub residuals: [f64; 3],
    /// Residual of the reduced scalar threshold equation
    /// `u'(x)/u''(x) + 2x = 0`.
    pub reduced_residual: f64,
}

fn u_funcs(l: &LambdaPair, x: f64) -> (f64, f64, f64) {
    let e1 = (l.lambda1 * x).exp();
    let e2 = (l.lambda2 * x).exp();
    (
        e1 - e2,
        l.lambda1 * e1 - l.lambda2 * e2,
        l.lambda1 * l.lambda1 * e1 - l.lambda2 * l.lambda2 * e2,
    )
}

/// Multiplied-through form of the reduced threshold equation:
/// `P(x) = u'(x) + 2x u''(x)`. Its positive roots coincide with those of
/// the quotient form wherever `u'' != 0`.
fn threshold_poly(l: &LambdaPair, x: f64) -> f64 {
    let e1 = (l.lambda1 * x).exp();
    let e2 = (l.lambda2 * x).exp();
    l.lambda1 * (1.0 + 2.0 * l.lambda1 * x) * e1 - l.lambda2 * (1.0 + 2.0 * l.lambda2 * x) * e2
}

fn threshold_poly_deriv(l: &LambdaPair, x: f64) -> f64 {
    let e1 = (l.lambda1 * x).exp();
    let e2 = (l.lambda2 * x).exp();
    l.lambda1 * l.lambda1 * (3.0 + 2.0 * l.lambda1 * x) * e1
        - l.lambda2 * l.lambda2 * (3.0 + 2.0 * l.lambda2 * x) * e2
}

/// Solve the three-equation pasting system for an arithmetic Brownian
/// component in the interior-threshold regime.
///
/// The scalar reduction has two positive roots below the pole of the
/// quotient; only the larger one yields a candidate whose generator stays
/// nonpositive above the threshold (the smaller root also produces a
/// strictly dominated barrier value), so the larger root is returned.
/// `x_star` does not depend on `theta`.
pub fn solve_threshold_bm(theta: f64, mu: f64, sigma: f64, rho: f64) -> Result<ThresholdSolution> {
    if !theta.is_finite() || theta <= 0.0 {
        return Err(Error::invalid("theta", format!("must be > 0, got {theta}")));
    }
    if classify_regime_bm(mu, sigma, rho)? != Regime::InteriorThreshold {
        return Err(Error::Regime(format!(
            "interior threshold requires mu^2 > 2 rho sigma^2, got mu = {mu}, sigma = {sigma}, rho = {rho}"
        )));
    }
    let lambda = lambda_roots(mu, sigma, rho)?;
    // u'' vanishes at the pole of the quotient form; all admissible roots
    // (C > 0 forces u'' < 0) lie strictly below it.
    let x_pole = 2.0 * ((-lambda.lambda2 / lambda.lambda1).ln()) / (lambda.lambda1 - lambda.lambda2);

    // scan downward from the pole for the first bracket of the largest root
    let n_scan = 200_000usize;
    let lo_bound = x_pole * 1e-12;
    let ratio = (lo_bound / x_pole).powf(1.0 / n_scan as f64);
    let mut hi = x_pole * (1.0 - 1e-12);
    let mut f_hi = threshold_poly(&lambda, hi);
    let mut bracket = None;
    let mut x = x_pole;
    for _ in 0..n_scan {
        x *= ratio;
        let f_lo = threshold_poly(&lambda, x);
        if f_lo == 0.0 || (f_lo > 0.0) != (f_hi > 0.0) {
            bracket = Some((x, hi));
            break;
        }
        hi = x;
        f_hi = f_lo;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::Numeric(format!(
            "no sign change of the threshold equation in (0, {x_pole}); mu = {mu}, sigma = {sigma}, rho = {rho}"
        ))
    })?;

    // bisection to ~1e-12 absolute, then a short Newton polish
    let mut f_lo = threshold_poly(&lambda, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = threshold_poly(&lambda, mid);
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * (1.0 + hi.abs()) {
            break;
        }
    }
    let mut x_star = 0.5 * (lo + hi);
    for _ in 0..3 {
        let f = threshold_poly(&lambda, x_star);
        let d = threshold_poly_deriv(&lambda, x_star);
        if d != 0.0 {
            let next = x_star - f / d;
            if next > 0.0 && next < x_pole {
                x_star = next;
            }
        }
    }

    let (u0, u1, u2) = u_funcs(&lambda, x_star);
    let c_coef = theta / (x_star.sqrt() * u1);
    let a_const = c_coef * u0;
    let residuals = [
        (c_coef * u0 - a_const).abs(),
        (c_coef * u1 - theta / x_star.sqrt()).abs(),
        (c_coef * u2 + 0.5 * theta * x_star.powf(-1.5)).abs(),
    ];
    let reduced_residual = (u1 / u2 + 2.0 * x_star).abs();
    Ok(ThresholdSolution {
        x_star,
        c_coef,
        a_const,
        lambda,
        residuals,
        reduced_residual,
    })
}

/// Threshold data for an interior-threshold logistic component.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogisticThreshold {
    pub x_star: f64,
    pub params: PsiParams,
    /// Residual of `x psi''(x) + psi'(x)/2` at the returned root.
    pub residual: f64,
    /// `sqrt(x_star) psi'(x_star)`, the normalization of the lower branch.
    pub norm: f64,
    /// Number of sign changes seen in the scan window (diagnostic; the
    /// threshold condition has a unique root at desk scale).
    pub sign_changes: usize,
}

fn logistic_threshold_fn(x: f64, p: &PsiParams) -> Result<f64> {
    let (d1, d2) = psi_derivs(x, p)?;
    Ok(x * d2 + 0.5 * d1)
}

/// Solve `x psi''(x) + psi'(x)/2 = 0` on `(1e-8 K, 5 K)` by sign scan and
/// bisection.
pub fn solve_threshold_logistic(
    mu: f64,
    carrying_capacity: f64,
    sigma: f64,
    rho: f64,
) -> Result<LogisticThreshold> {
    if classify_regime_logistic(mu, sigma, rho)? != Regime::InteriorThreshold {
        return Err(Error::Regime(format!(
            "interior threshold requires mu > 2 rho + sigma^2/4, got mu = {mu}, sigma = {sigma}, rho = {rho}"
        )));
    }
    let params = PsiParams::new(mu, carrying_capacity, sigma, rho)?;
    let lo_bound = 1e-8 * carrying_capacity;
    let hi_bound = (5.0 * carrying_capacity).min(params.max_x());

    let n_scan = 4096usize;
    let ratio = (hi_bound / lo_bound).powf(1.0 / n_scan as f64);
    let mut x_prev = lo_bound;
    let mut f_prev = logistic_threshold_fn(x_prev, &params)?;
    let mut bracket = None;
    let mut sign_changes = 0usize;
    let mut x = lo_bound;
    for _ in 0..n_scan {
        x *= ratio;
        let f = logistic_threshold_fn(x, &params)?;
        if f == 0.0 || (f > 0.0) != (f_prev > 0.0) {
            sign_changes += 1;
            if bracket.is_none() {
                bracket = Some((x_prev, x));
            }
        }
        x_prev = x;
        f_prev = f;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::Numeric(format!(
            "no sign change of x psi'' + psi'/2 in ({lo_bound}, {hi_bound})"
        ))
    })?;
    let mut f_lo = logistic_threshold_fn(lo, &params)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = logistic_threshold_fn(mid, &params)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    let x_star = 0.5 * (lo + hi);
    let residual = logistic_threshold_fn(x_star, &params)?.abs();
    let (d1, _) = psi_derivs(x_star, &params)?;
    Ok(LogisticThreshold {
        x_star,
        params,
        residual,
        norm: x_star.sqrt() * d1,
        sign_changes,
    })
}

/// Solved per-component value function (undiscounted; the common factor
/// `e^{-rho s}` is applied at the solution level).
#[derive(Debug, Clone, Serialize)]
pub enum ComponentValue {
    /// `2 theta sqrt(x)`
    BmChatter { theta: f64 },
    /// Exponential combination below the threshold, shifted square root
    /// above it.
    BmBarrier {
        theta: f64,
        threshold: ThresholdSolution,
    },
    /// `2 theta sqrt(x)`
    LogisticChatter { theta: f64 },
    /// `theta psi(x) / (sqrt(x*) psi'(x*))` below the threshold, shifted
    /// square root plus a constant above it.
    LogisticBarrier {
        theta: f64,
        threshold: LogisticThreshold,
    },
}

impl ComponentValue {
    pub fn regime(&self) -> Regime {
        match self {
            ComponentValue::BmChatter { .. } | ComponentValue::LogisticChatter { .. } => {
                Regime::ChatterToZero
            }
            _ => Regime::InteriorThreshold,
        }
    }

    pub fn x_star(&self) -> Option<f64> {
        match self {
            ComponentValue::BmBarrier { threshold, .. } => Some(threshold.x_star),
            ComponentValue::LogisticBarrier { threshold, .. } => Some(threshold.x_star),
            _ => None,
        }
    }

    /// Constant term of the upper (harvest-region) branch of the logistic
    /// value: `sqrt(x*) (mu (1 - x*/K) - sigma^2/4) / rho`.
    fn logistic_upper_const(t: &LogisticThreshold) -> f64 {
        let p = &t.params;
        t.x_star.sqrt() * (p.mu * (1.0 - t.x_star / p.carrying_capacity) - 0.25 * p.sigma * p.sigma)
            / p.rho
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("value needs x >= 0, got {x}")));
        }
        Ok(match self {
            ComponentValue::BmChatter { theta } | ComponentValue::LogisticChatter { theta } => {
                2.0 * theta * x.sqrt()
            }
            ComponentValue::BmBarrier { theta, threshold } => {
                if x <= threshold.x_star {
                    let (u0, _, _) = u_funcs(&threshold.lambda, x);
                    threshold.c_coef * u0
                } else {
                    2.0 * theta * (x.sqrt() - threshold.x_star.sqrt()) + threshold.a_const
                }
            }
            ComponentValue::LogisticBarrier { theta, threshold } => {
                if x == 0.0 {
                    0.0
                } else if x < threshold.x_star {
                    theta * psi(x, &threshold.params)? / threshold.norm
                } else {
                    theta
                        * (2.0 * (x.sqrt() - threshold.x_star.sqrt())
                            + Self::logistic_upper_const(threshold))
                }
            }
        })
    }

    /// First derivative; at a threshold the two one-sided values coincide.
    pub fn d1(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("d1 needs x > 0, got {x}")));
        }
        Ok(match self {
            ComponentValue::BmChatter { theta } | ComponentValue::LogisticChatter { theta } => {
                theta / x.sqrt()
            }
            ComponentValue::BmBarrier { theta, threshold } => {
                if x <= threshold.x_star {
                    let (_, u1, _) = u_funcs(&threshold.lambda, x);
                    threshold.c_coef * u1
                } else {
                    theta / x.sqrt()
                }
            }
            ComponentValue::LogisticBarrier { theta, threshold } => {
                if x < threshold.x_star {
                    theta * psi_derivs(x, &threshold.params)?.0 / threshold.norm
                } else {
                    theta / x.sqrt()
                }
            }
        })
    }

    /// Second derivative; away from a threshold it is two-sided, at the
    /// threshold the lower branch is used.
    pub fn d2(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("d2 needs x > 0, got {x}")));
        }
        Ok(match self {
            ComponentValue::BmChatter { theta } | ComponentValue::LogisticChatter { theta } => {
                -0.5 * theta * x.powf(-1.5)
            }
            ComponentValue::BmBarrier { theta, threshold } => {
                if x <= threshold.x_star {
                    let (_, _, u2) = u_funcs(&threshold.lambda, x);
                    threshold.c_coef * u2
                } else {
                    -0.5 * theta * x.powf(-1.5)
                }
            }
            ComponentValue::LogisticBarrier { theta, threshold } => {
                if x < threshold.x_star {
                    theta * psi_derivs(x, &threshold.params)?.1 / threshold.norm
                } else {
                    -0.5 * theta * x.powf(-1.5)
                }
            }
        })
    }

    /// One-sided first and second derivatives of the two branches at the
    /// threshold, evaluated analytically. `None` for chatter components.
    pub fn pasting_derivs(&self) -> Option<Result<verify::PastingDerivs>> {
        match self {
            ComponentValue::BmBarrier { theta, threshold } => {
                let (_, u1, u2) = u_funcs(&threshold.lambda, threshold.x_star);
                let xs = threshold.x_star;
                Some(Ok(verify::PastingDerivs {
                    d1_left: threshold.c_coef * u1,
                    d1_right: theta / xs.sqrt(),
                    d2_left: threshold.c_coef * u2,
                    d2_right: -0.5 * theta * xs.powf(-1.5),
                }))
            }
            ComponentValue::LogisticBarrier { theta, threshold } => {
                let xs = threshold.x_star;
                Some(psi_derivs(xs, &threshold.params).map(|(d1, d2)| verify::PastingDerivs {
                    d1_left: theta * d1 / threshold.norm,
                    d1_right: theta / xs.sqrt(),
                    d2_left: theta * d2 / threshold.norm,
                    d2_right: -0.5 * theta * xs.powf(-1.5),
                }))
            }
            _ => None,
        }
    }
}

/// Closed-form value function of a whole problem instance: the sum of
/// independent per-component values, discounted by `e^{-rho s}`.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyticSolution {
    pub rho: f64,
    pub components: Vec<ComponentValue>,
}

impl AnalyticSolution {
    /// `Phi(s, x)`.
    pub fn value(&self, s: f64, x: &[f64]) -> Result<f64> {
        Ok((-self.rho * s).exp() * self.value_undiscounted(x)?)
    }

    pub fn value_undiscounted(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.components.len() {
            return Err(Error::invalid(
                "x",
                format!(
                    "state has {} components, solution has {}",
                    x.len(),
                    self.components.len()
                ),
            ));
        }
        let mut total = 0.0;
        for (c, &xi) in self.components.iter().zip(x) {
            total += c.value(xi)?;
        }
        Ok(total)
    }
}

/// Solve every component in closed form. Errors with `NoAnalyticSolution`
/// for general dynamics or for price shapes outside the solved families.
pub fn solve(spec: &ProblemSpec) -> Result<AnalyticSolution> {
    let rho = spec.prices.rho();
    let mut components = Vec::with_capacity(spec.n_components());
    for (dynamics, price) in spec
        .dynamics
        .components()
        .iter()
        .zip(spec.prices.components())
    {
        let theta = match price {
            PriceFn::PowerHalf { theta } => *theta,
            other => {
                return Err(Error::NoAnalyticSolution(format!(
                    "no closed form for {other:?} prices; only theta x^-1/2 is solved"
                )))
            }
        };
        let cv = match dynamics {
            ComponentDynamics::ArithmeticBm { mu, sigma } => {
                match classify_regime_bm(*mu, *sigma, rho)? {
                    Regime::ChatterToZero => ComponentValue::BmChatter { theta },
                    Regime::InteriorThreshold => ComponentValue::BmBarrier {
                        theta,
                        threshold: solve_threshold_bm(theta, *mu, *sigma, rho)?,
                    },
                }
            }
            ComponentDynamics::Logistic {
                mu,
                carrying_capacity,
                sigma,
            } => match classify_regime_logistic(*mu, *sigma, rho)? {
                Regime::ChatterToZero => ComponentValue::LogisticChatter { theta },
                Regime::InteriorThreshold => ComponentValue::LogisticBarrier {
                    theta,
                    threshold: solve_threshold_logistic(*mu, *carrying_capacity, *sigma, rho)?,
                },
            },
            ComponentDynamics::General { .. } => {
                return Err(Error::NoAnalyticSolution(
                    "general dynamics have no closed-form value".into(),
                ))
            }
        };
        components.push(cv);
    }
    Ok(AnalyticSolution { rho, components })
}

/// The chattering-form candidate `2 theta_i sqrt(x_i)` for every component,
/// regardless of regime. In the chatter regime this is the value function;
/// with interior-threshold parameters it violates the generator condition
/// and serves as a negative control for the verifier.
pub fn chattering_candidate(spec: &ProblemSpec) -> Result<AnalyticSolution> {
    let rho = spec.prices.rho();
    let mut components = Vec::with_capacity(spec.n_components());
    for price in spec.prices.components() {
        let theta = match price {
            PriceFn::PowerHalf { theta } => *theta,
            other => {
                return Err(Error::NoAnalyticSolution(format!(
                    "chattering form needs theta x^-1/2 prices, got {other:?}"
                )))
            }
        };
        components.push(ComponentValue::BmChatter { theta });
    }
    Ok(AnalyticSolution { rho, components })
}

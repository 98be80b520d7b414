//! Yield bounds from the price transform `Pi(x) = int_0^x pi(v) dv`: the
//! chattering value `sum_i Pi_i(x_i)` bounds the attainable yield from
//! below, and `sum_i Pi_i(x_i) + sum_i max(M_i, 0)/rho (1 - E[e^{-rho T}])`
//! bounds it from above, where `M_i` is the supremum of the transformed
//! generator `G_i(x) = (sigma_i^2(x)/2) pi_i'(x) + b_i(x) pi_i(x)
//! - rho Pi_i(x)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ComponentDynamics, PriceFn, ProblemSpec};

/// `Pi(x) = int_0^x pi(v) dv`: nondecreasing, concave, and the exact value
/// of chattering a stock from `x` down to zero at frozen time.
pub fn big_pi(price: &PriceFn, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("Pi needs x >= 0, got {x}")));
    }
    price.integral(0.0, x)
}

/// The transformed generator `(G_rho Pi)(x)` of one component.
pub fn g_rho_pi(dynamics: &ComponentDynamics, price: &PriceFn, rho: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("G_rho Pi needs x > 0, got {x}")));
    }
    let vol = dynamics.vol(x);
    Ok(0.5 * vol * vol * price.derivative(x)? + dynamics.drift(x) * price.eval(x)
        - rho * big_pi(price, x)?)
}

/// Maximizer of `(G_rho Pi)` for an arithmetic Brownian component with a
/// `theta x^{-1/2}` price: `x~ = (-mu + sqrt(mu^2 + 6 sigma^2 rho))/(4 rho)`,
/// computed in the cancellation-free form.
pub fn x_tilde_bm(mu: f64, sigma: f64, rho: f64) -> Result<f64> {
    for (name, v) in [("mu", mu), ("sigma", sigma), ("rho", rho)] {
        if !v.is_finite() {
            return Err(Error::invalid(name, format!("must be finite, got {v}")));
        }
    }
    if rho <= 0.0 {
        return Err(Error::invalid("rho", format!("must be > 0, got {rho}")));
    }
    let s2 = sigma * sigma;
    Ok(1.5 * s2 / (mu + (mu * mu + 6.0 * s2 * rho).sqrt()))
}

/// Supremum data of `(G_rho Pi)` for one component: the sup `m` (not yet
/// clamped) and its location when it is attained at an interior point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeneratorSup {
    pub m: f64,
    pub x_tilde: Option<f64>,
}

fn sup_g_rho_pi(dynamics: &ComponentDynamics, price: &PriceFn, rho: f64) -> Result<GeneratorSup> {
    match (dynamics, price) {
        (ComponentDynamics::ArithmeticBm { mu, sigma }, PriceFn::PowerHalf { .. }) => {
            let xt = x_tilde_bm(*mu, *sigma, rho)?;
            Ok(GeneratorSup {
                m: g_rho_pi(dynamics, price, rho, xt)?,
                x_tilde: Some(xt),
            })
        }
        (
            ComponentDynamics::Logistic {
                mu,
                carrying_capacity,
                sigma,
            },
            PriceFn::PowerHalf { theta },
        ) => {
            // G(x) = theta sqrt(x) (c0 - (mu/K) x) with
            // c0 = mu - 2 rho - sigma^2/4; nonpositive everywhere when
            // c0 <= 0 with supremum 0 at the origin
            let c0 = mu - 2.0 * rho - 0.25 * sigma * sigma;
            if c0 <= 0.0 {
                Ok(GeneratorSup {
                    m: 0.0,
                    x_tilde: None,
                })
            } else {
                let xt = c0 * carrying_capacity / (3.0 * mu);
                Ok(GeneratorSup {
                    m: theta * xt.sqrt() * (2.0 / 3.0) * c0,
                    x_tilde: Some(xt),
                })
            }
        }
        _ => numeric_sup(dynamics, price, rho),
    }
}

/// Grid search plus golden-section refinement for component forms without a
/// closed-form maximizer.
fn numeric_sup(dynamics: &ComponentDynamics, price: &PriceFn, rho: f64) -> Result<GeneratorSup> {
    let g = |x: f64| g_rho_pi(dynamics, price, rho, x);
    let (mut lo, mut hi) = (1e-6f64, 1e3f64);
    for _ in 0..3 {
        let n = 4096;
        let ratio = (hi / lo).powf(1.0 / n as f64);
        let mut best_x = lo;
        let mut best = f64::NEG_INFINITY;
        let mut x = lo;
        for _ in 0..=n {
            let v = g(x)?;
            if v > best {
                best = v;
                best_x = x;
            }
            x *= ratio;
        }
        if best_x <= lo * (1.0 + 1e-9) {
            // sup approached at the left edge; Pi(0) = 0 makes the limit
            // there at most the boundary value of the drift-price product
            lo /= 100.0;
            if lo < 1e-14 {
                return Ok(GeneratorSup {
                    m: best.max(0.0),
                    x_tilde: None,
                });
            }
            continue;
        }
        if best_x >= hi / (1.0 + 1e-9) {
            hi *= 100.0;
            if hi > 1e12 {
                return Err(Error::BoundUnavailable(
                    "transformed generator appears unbounded above".into(),
                ));
            }
            continue;
        }
        // golden-section refinement inside the bracketing cells
        let (mut a, mut b) = (best_x / ratio, best_x * ratio);
        let phi = 0.618_033_988_749_894_9;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut gc, mut gd) = (g(c)?, g(d)?);
        for _ in 0..200 {
            if (b - a) < 1e-12 * b {
                break;
            }
            if gc > gd {
                b = d;
                d = c;
                gd = gc;
                c = b - phi * (b - a);
                gc = g(c)?;
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + phi * (b - a);
                gd = g(d)?;
            }
        }
        let xt = 0.5 * (a + b);
        return Ok(GeneratorSup {
            m: g(xt)?,
            x_tilde: Some(xt),
        });
    }
    Err(Error::BoundUnavailable(
        "could not localize the generator supremum".into(),
    ))
}

/// Per-component bound data.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComponentBound {
    pub pi_value: f64,
    pub m: f64,
    pub x_tilde: Option<f64>,
}

/// Lower and upper bounds on the attainable expected discounted yield from
/// `x0` at time zero.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    /// `sum_i Pi_i(x0_i)`: the immediate-chattering value.
    pub lower: f64,
    /// `lower + sum_i max(M_i, 0)/rho`, valid with the extinction discount
    /// replaced by its worst case.
    pub upper_conservative: f64,
    /// Upper bound refined by a Monte Carlo estimate of `E[e^{-rho T}]`.
    pub upper_mc: Option<f64>,
    pub per_component: Vec<ComponentBound>,
}

/// Compute the bounds report. A negative generator supremum is clamped to
/// zero, which keeps the bound valid (only looser) in every regime.
pub fn bounds_report(
    spec: &ProblemSpec,
    x0: &[f64],
    extinction_discount: Option<f64>,
) -> Result<BoundsReport> {
    if x0.len() != spec.n_components() {
        return Err(Error::invalid(
            "x0",
            format!(
                "state has {} components, spec has {}",
                x0.len(),
                spec.n_components()
            ),
        ));
    }
    for &xi in x0 {
        if !(xi >= 0.0) {
            return Err(Error::Domain(format!("x0 must be componentwise >= 0, got {xi}")));
        }
    }
    let rho = spec.prices.rho();
    let mut lower = 0.0;
    let mut m_sum = 0.0;
    let mut per_component = Vec::with_capacity(x0.len());
    for (i, ((dynamics, price), &xi)) in spec
        .dynamics
        .components()
        .iter()
        .zip(spec.prices.components())
        .zip(x0)
        .enumerate()
    {
        let pi_value = big_pi(price, xi)?;
        let sup = sup_g_rho_pi(dynamics, price, rho).map_err(|e| match e {
            Error::BoundUnavailable(msg) => {
                Error::BoundUnavailable(format!("component {i}: {msg}"))
            }
            other => other,
        })?;
        lower += pi_value;
        m_sum += sup.m.max(0.0);
        per_component.push(ComponentBound {
            pi_value,
            m: sup.m,
            x_tilde: sup.x_tilde,
        });
    }
    let upper_conservative = lower + m_sum / rho;
    let upper_mc = extinction_discount.map(|d| lower + m_sum / rho * (1.0 - d.clamp(0.0, 1.0)));
    Ok(BoundsReport {
        lower,
        upper_conservative,
        upper_mc,
        per_component,
    })
}

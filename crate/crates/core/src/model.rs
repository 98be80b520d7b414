//! Problem instances: per-component diffusion dynamics, density-dependent
//! prices with a discount rate, and the regime dichotomy that separates
//! "chatter everything down immediately" from "maintain the stock below a
//! threshold".
//!
//! Components are mutually independent: each is driven by its own Brownian
//! coordinate and there are no cross terms. The state space is `(0, inf)`
//! per component; a component is extinct once it reaches zero.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;

/// Scalar state-dependent coefficient usable from concurrent workers.
pub type StateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Uncontrolled dynamics of one population component.
#[derive(Clone)]
pub enum ComponentDynamics {
    /// `dX = mu dt + sigma dB`
    ArithmeticBm { mu: f64, sigma: f64 },
    /// `dX = mu X (1 - X/K) dt + sigma X dB`
    Logistic {
        mu: f64,
        carrying_capacity: f64,
        sigma: f64,
    },
    /// `dX = drift(X) dt + vol(X) dB`; accepted by the simulator and the
    /// bound machinery, rejected by closed-form solvers.
    General { drift: StateFn, vol: StateFn },
}

impl fmt::Debug for ComponentDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentDynamics::ArithmeticBm { mu, sigma } => f
                .debug_struct("ArithmeticBm")
                .field("mu", mu)
                .field("sigma", sigma)
                .finish(),
            ComponentDynamics::Logistic {
                mu,
                carrying_capacity,
                sigma,
            } => f
                .debug_struct("Logistic")
                .field("mu", mu)
                .field("carrying_capacity", carrying_capacity)
                .field("sigma", sigma)
                .finish(),
            ComponentDynamics::General { .. } => f.write_str("General{..}"),
        }
    }
}

impl ComponentDynamics {
    pub fn drift(&self, x: f64) -> f64 {
        match self {
            ComponentDynamics::ArithmeticBm { mu, .. } => *mu,
            ComponentDynamics::Logistic {
                mu,
                carrying_capacity,
                ..
            } => mu * x * (1.0 - x / carrying_capacity),
            ComponentDynamics::General { drift, .. } => drift(x),
        }
    }

    pub fn vol(&self, x: f64) -> f64 {
        match self {
            ComponentDynamics::ArithmeticBm { sigma, .. } => *sigma,
            ComponentDynamics::Logistic { sigma, .. } => sigma * x,
            ComponentDynamics::General { vol, .. } => vol(x),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ComponentDynamics::ArithmeticBm { .. } => "arithmetic_bm",
            ComponentDynamics::Logistic { .. } => "logistic",
            ComponentDynamics::General { .. } => "general",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ComponentDynamics::ArithmeticBm { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::invalid("mu", format!("must be finite, got {mu}")));
                }
                if !sigma.is_finite() || *sigma == 0.0 {
                    return Err(Error::invalid(
                        "sigma",
                        format!("must be finite and nonzero, got {sigma}"),
                    ));
                }
            }
            ComponentDynamics::Logistic {
                mu,
                carrying_capacity,
                sigma,
            } => {
                if !mu.is_finite() || *mu <= 0.0 {
                    return Err(Error::invalid("mu", format!("must be > 0, got {mu}")));
                }
                if !carrying_capacity.is_finite() || *carrying_capacity <= 0.0 {
                    return Err(Error::invalid(
                        "carrying_capacity",
                        format!("must be > 0, got {carrying_capacity}"),
                    ));
                }
                if !sigma.is_finite() || *sigma <= 0.0 {
                    return Err(Error::invalid("sigma", format!("must be > 0, got {sigma}")));
                }
            }
            ComponentDynamics::General { .. } => {}
        }
        Ok(())
    }
}

/// The uncontrolled dynamics of the whole family of components.
#[derive(Debug, Clone)]
pub struct DiffusionSpec {
    components: Vec<ComponentDynamics>,
}

impl DiffusionSpec {
    pub fn new(components: Vec<ComponentDynamics>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("components", "need at least one component"));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(DiffusionSpec { components })
    }

    pub fn components(&self) -> &[ComponentDynamics] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Per-unit price of one component as a function of its own density.
#[derive(Clone)]
pub enum PriceFn {
    /// `pi(x) = theta x^{-1/2}`
    PowerHalf { theta: f64 },
    /// `pi(x) = p`
    Constant { p: f64 },
    /// arbitrary nonincreasing nonnegative price
    General { pi: StateFn },
}

impl fmt::Debug for PriceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriceFn::PowerHalf { theta } => {
                f.debug_struct("PowerHalf").field("theta", theta).finish()
            }
            PriceFn::Constant { p } => f.debug_struct("Constant").field("p", p).finish(),
            PriceFn::General { .. } => f.write_str("General{..}"),
        }
    }
}

impl PriceFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PriceFn::PowerHalf { theta } => {
                if x > 0.0 {
                    theta / x.sqrt()
                } else {
                    f64::INFINITY
                }
            }
            PriceFn::Constant { p } => *p,
            PriceFn::General { pi } => pi(x.max(0.0)),
        }
    }

    /// `pi'(x)`; analytic where the form is known, central difference for
    /// general prices.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::Domain(format!("price derivative needs x > 0, got {x}")));
        }
        Ok(match self {
            PriceFn::PowerHalf { theta } => -0.5 * theta * x.powf(-1.5),
            PriceFn::Constant { .. } => 0.0,
            PriceFn::General { pi } => {
                let h = 1e-6 * x.abs().max(1.0);
                let h = h.min(0.5 * x);
                (pi(x + h) - pi(x - h)) / (2.0 * h)
            }
        })
    }

    /// `int_a^b pi(u) du` for `0 <= a <= b`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(a.is_finite() && b.is_finite()) || a < 0.0 || b < a {
            return Err(Error::Domain(format!(
                "price integral needs 0 <= a <= b, got [{a}, {b}]"
            )));
        }
        match self {
            PriceFn::PowerHalf { theta } => Ok(2.0 * theta * (b.sqrt() - a.sqrt())),
            PriceFn::Constant { p } => Ok(p * (b - a)),
            PriceFn::General { pi } => {
                let f = |x: f64| pi(x);
                if a == 0.0 {
                    quad::integrate_from_zero(&f, b, 1e-12)
                } else {
                    quad::integrate(&f, a, b, 1e-12)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            PriceFn::PowerHalf { theta } => {
                if !theta.is_finite() || *theta <= 0.0 {
                    return Err(Error::invalid("theta", format!("must be > 0, got {theta}")));
                }
            }
            PriceFn::Constant { p } => {
                if !p.is_finite() || *p <= 0.0 {
                    return Err(Error::invalid("p", format!("must be > 0, got {p}")));
                }
            }
            PriceFn::General { pi } => {
                // sampled shape check: nonincreasing and nonnegative
                let mut prev = f64::INFINITY;
                for i in 0..=60 {
                    let x = 1e-6 * 10f64.powf(i as f64 * 0.2);
                    let v = pi(x);
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::invalid(
                            "pi",
                            format!("price must be finite and nonnegative, pi({x}) = {v}"),
                        ));
                    }
                    if v > prev * (1.0 + 1e-12) + 1e-12 {
                        return Err(Error::invalid(
                            "pi",
                            format!("price must be nonincreasing, violated near x = {x}"),
                        ));
                    }
                    prev = v;
                }
            }
        }
        Ok(())
    }
}

/// Prices for all components plus the common discount rate.
#[derive(Debug, Clone)]
pub struct PriceSpec {
    rho: f64,
    components: Vec<PriceFn>,
}

impl PriceSpec {
    pub fn new(rho: f64, components: Vec<PriceFn>) -> Result<Self> {
        if !rho.is_finite() || rho <= 0.0 {
            return Err(Error::invalid("rho", format!("must be > 0, got {rho}")));
        }
        if components.is_empty() {
            return Err(Error::invalid("components", "need at least one price"));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(PriceSpec { rho, components })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn components(&self) -> &[PriceFn] {
        &self.components
    }
}

/// Which of the two qualitative solutions applies to a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// The whole stock should be chattered down to zero immediately.
    ChatterToZero,
    /// Keep the stock below a positive threshold; chatter down to it if
    /// above, then harvest by reflection at it.
    InteriorThreshold,
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {v}")))
    }
}

/// Regime of an arithmetic Brownian component: chatter to zero iff
/// `mu^2 <= 2 rho sigma^2` (equality included).
pub fn classify_regime_bm(mu: f64, sigma: f64, rho: f64) -> Result<Regime> {
    check_finite("mu", mu)?;
    check_finite("sigma", sigma)?;
    check_finite("rho", rho)?;
    if sigma == 0.0 {
        return Err(Error::invalid("sigma", "must be nonzero"));
    }
    if rho <= 0.0 {
        return Err(Error::invalid("rho", format!("must be > 0, got {rho}")));
    }
    Ok(if mu * mu <= 2.0 * rho * sigma * sigma {
        Regime::ChatterToZero
    } else {
        Regime::InteriorThreshold
    })
}

/// Regime of a logistic component: chatter to zero iff
/// `mu <= 2 rho + sigma^2 / 4` (equality included).
pub fn classify_regime_logistic(mu: f64, sigma: f64, rho: f64) -> Result<Regime> {
    check_finite("mu", mu)?;
    check_finite("sigma", sigma)?;
    check_finite("rho", rho)?;
    if mu <= 0.0 || sigma <= 0.0 || rho <= 0.0 {
        return Err(Error::invalid(
            "mu/sigma/rho",
            format!("must all be > 0, got ({mu}, {sigma}, {rho})"),
        ));
    }
    Ok(if mu <= 2.0 * rho + 0.25 * sigma * sigma {
        Regime::ChatterToZero
    } else {
        Regime::InteriorThreshold
    })
}

/// A full problem instance. Immutable after construction; safe to share.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub dynamics: DiffusionSpec,
    pub prices: PriceSpec,
}

impl ProblemSpec {
    pub fn new(dynamics: DiffusionSpec, prices: PriceSpec) -> Result<Self> {
        if dynamics.len() != prices.components().len() {
            return Err(Error::invalid(
                "components",
                format!(
                    "dynamics has {} components but prices has {}",
                    dynamics.len(),
                    prices.components().len()
                ),
            ));
        }
        Ok(ProblemSpec { dynamics, prices })
    }

    pub fn n_components(&self) -> usize {
        self.dynamics.len()
    }

    /// Regime of component `i`; errors for general dynamics, which have no
    /// closed-form classification.
    pub fn classify(&self, i: usize) -> Result<Regime> {
        let rho = self.prices.rho();
        match &self.dynamics.components()[i] {
            ComponentDynamics::ArithmeticBm { mu, sigma } => classify_regime_bm(*mu, *sigma, rho),
            ComponentDynamics::Logistic { mu, sigma, .. } => {
                classify_regime_logistic(*mu, *sigma, rho)
            }
            ComponentDynamics::General { .. } => Err(Error::NoAnalyticSolution(
                "general dynamics have no regime classification".into(),
            )),
        }
    }

    pub fn all_arithmetic_bm(&self) -> bool {
        self.dynamics
            .components()
            .iter()
            .all(|c| matches!(c, ComponentDynamics::ArithmeticBm { .. }))
    }
}

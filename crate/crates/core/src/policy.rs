//! Harvesting strategies: the admissible-strategy contract (cumulative
//! harvest nondecreasing, right-continuous, zero before the start, never
//! driving a component negative) plus the concrete policies the simulator
//! executes.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::PriceFn;

/// Per-component harvesting rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentPolicy {
    /// Harvest the whole state in one lump at the start.
    TakeAll,
    /// `m` lumps of size `x(start)/m` at times `start + (k/m) eta`,
    /// `k = 1..=m`. With `eta = 0` all lumps fire at the start with no
    /// diffusion between them.
    Chattering { m: u32, eta: f64 },
    /// Chatter any initial excess down to `x_star`, then harvest the
    /// projection overshoot every step (discretized reflection).
    Barrier { x_star: f64 },
    /// No harvesting; baseline.
    NoHarvest,
}

impl ComponentPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            ComponentPolicy::Chattering { m, eta } => {
                if *m == 0 {
                    return Err(Error::invalid("m", "must be >= 1"));
                }
                if !eta.is_finite() || *eta < 0.0 {
                    return Err(Error::invalid("eta", format!("must be >= 0, got {eta}")));
                }
            }
            ComponentPolicy::Barrier { x_star } => {
                if !x_star.is_finite() || *x_star <= 0.0 {
                    return Err(Error::invalid("x_star", format!("must be > 0, got {x_star}")));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

impl fmt::Display for ComponentPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentPolicy::TakeAll => write!(f, "take_all"),
            ComponentPolicy::Chattering { m, eta } => write!(f, "chattering(m={m},eta={eta})"),
            ComponentPolicy::Barrier { x_star } => write!(f, "barrier(x_star={x_star})"),
            ComponentPolicy::NoHarvest => write!(f, "no_harvest"),
        }
    }
}

/// A full strategy: one rule per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub components: Vec<ComponentPolicy>,
}

impl Policy {
    pub fn new(components: Vec<ComponentPolicy>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("components", "need at least one component"));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Policy { components })
    }

    /// Same rule for every component.
    pub fn uniform(n: usize, rule: ComponentPolicy) -> Result<Self> {
        Policy::new(vec![rule; n])
    }

    pub fn id(&self) -> String {
        self.components
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("+")
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Value of chattering a stock from `x_from` down to `x_to` at frozen time:
/// `int_{x_to}^{x_from} pi(u) du`, undiscounted. The caller applies the
/// discount factor of the harvest instant.
pub fn chattering_lump_value(price: &PriceFn, x_from: f64, x_to: f64) -> Result<f64> {
    if !(x_to >= 0.0 && x_from >= x_to) {
        return Err(Error::Domain(format!(
            "need 0 <= x_to <= x_from, got x_to = {x_to}, x_from = {x_from}"
        )));
    }
    price.integral(x_to, x_from)
}

/// How a single lump is labelled for valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LumpKind {
    /// A lump the policy schedules explicitly (take-all, chattering);
    /// priced per the configured lump-pricing mode.
    Scheduled,
    /// Projection overshoot at a barrier; always valued by the exact price
    /// integral, which is the chattering value of the excess.
    BarrierProjection,
}

/// One harvest event inside a step window.
#[derive(Debug, Clone, Copy)]
pub struct Lump {
    pub amount: f64,
    /// Time of the lump relative to the strategy start.
    pub at: f64,
    pub kind: LumpKind,
}

/// Per-path mutable execution state of one component's rule.
#[derive(Debug, Clone)]
pub enum PolicyProgress {
    TakeAll { done: bool },
    Chattering { next_k: u32, lump: f64 },
    Barrier,
    NoHarvest,
}

impl ComponentPolicy {
    /// Start executing on a component whose state right before the start is
    /// `x0`. Chattering freezes its lump size as `x0 / m` here.
    pub fn start(&self, x0: f64) -> PolicyProgress {
        match self {
            ComponentPolicy::TakeAll => PolicyProgress::TakeAll { done: false },
            ComponentPolicy::Chattering { m, .. } => PolicyProgress::Chattering {
                next_k: 1,
                lump: x0 / *m as f64,
            },
            ComponentPolicy::Barrier { .. } => PolicyProgress::Barrier,
            ComponentPolicy::NoHarvest => PolicyProgress::NoHarvest,
        }
    }

    /// Next lump due no later than `w_hi` (time relative to the start),
    /// given the current component state. Returns `None` when nothing more
    /// is due in this window. Lumps never exceed the available state.
    pub fn next_lump(&self, progress: &mut PolicyProgress, state: f64, w_hi: f64) -> Option<Lump> {
        match (self, progress) {
            (ComponentPolicy::TakeAll, PolicyProgress::TakeAll { done }) => {
                if *done || state <= 0.0 {
                    None
                } else {
                    *done = true;
                    Some(Lump {
                        amount: state,
                        at: 0.0,
                        kind: LumpKind::Scheduled,
                    })
                }
            }
            (ComponentPolicy::Chattering { m, eta }, PolicyProgress::Chattering { next_k, lump }) => {
                if *next_k > *m || state <= 0.0 {
                    return None;
                }
                let t_k = *eta * (*next_k as f64) / (*m as f64);
                if t_k > w_hi {
                    return None;
                }
                // the final lump clears whatever remains, so the stock is
                // emptied exactly rather than leaving subtraction dust
                let amount = if *next_k == *m {
                    state
                } else {
                    lump.min(state)
                };
                *next_k += 1;
                Some(Lump {
                    amount,
                    at: t_k,
                    kind: LumpKind::Scheduled,
                })
            }
            (ComponentPolicy::Barrier { x_star }, PolicyProgress::Barrier) => {
                let excess = state - x_star;
                if excess > 0.0 {
                    Some(Lump {
                        amount: excess,
                        at: w_hi,
                        kind: LumpKind::BarrierProjection,
                    })
                } else {
                    None
                }
            }
            (ComponentPolicy::NoHarvest, PolicyProgress::NoHarvest) => None,
            _ => unreachable!("progress does not match policy variant"),
        }
    }
}

/// Total harvest increment a rule produces in the window ending at `w_hi`,
/// starting from `state`. This drains the same lump sequence the simulator
/// consumes one at a time.
pub fn policy_events(
    policy: &ComponentPolicy,
    progress: &mut PolicyProgress,
    state: f64,
    w_hi: f64,
) -> f64 {
    let mut remaining = state;
    let mut total = 0.0;
    while let Some(lump) = policy.next_lump(progress, remaining, w_hi) {
        total += lump.amount;
        remaining -= lump.amount;
        if remaining <= 0.0 {
            break;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(got: f64, want: f64, tol: f64, msg: &str) {
        let diff = (got - want).abs();
        assert!(
            diff <= tol * want.abs().max(1.0),
            "{msg}: got {got}, want {want}, diff {diff}"
        );
    }

    #[test]
    fn lump_value_power_half() {
        let p = PriceFn::PowerHalf { theta: 1.0 };
        assert_close(chattering_lump_value(&p, 1.0, 0.0).unwrap(), 2.0, 1e-15, "full chatter");
        assert_eq!(chattering_lump_value(&p, 3.0, 3.0).unwrap(), 0.0);
        let p2 = PriceFn::PowerHalf { theta: 2.0 };
        assert_close(chattering_lump_value(&p2, 4.0, 1.0).unwrap(), 4.0, 1e-15, "theta=2");
        assert!(chattering_lump_value(&p, 1.0, 2.0).is_err());
        assert!(chattering_lump_value(&p, 1.0, -0.1).is_err());
    }

    #[test]
    fn take_all_fires_once() {
        let p = ComponentPolicy::TakeAll;
        let mut prog = p.start(3.5);
        assert_eq!(policy_events(&p, &mut prog, 3.5, 0.0), 3.5);
        assert_eq!(policy_events(&p, &mut prog, 0.0, 0.1), 0.0);
        assert_eq!(policy_events(&p, &mut prog, 2.0, 0.2), 0.0);
    }

    #[test]
    fn chattering_m1_eta0_equals_take_all() {
        let p = ComponentPolicy::Chattering { m: 1, eta: 0.0 };
        let mut prog = p.start(3.5);
        assert_eq!(policy_events(&p, &mut prog, 3.5, 0.0), 3.5);
        assert_eq!(policy_events(&p, &mut prog, 0.0, 0.1), 0.0);
    }

    #[test]
    fn chattering_eta0_empties_at_start() {
        let p = ComponentPolicy::Chattering { m: 4, eta: 0.0 };
        let mut prog = p.start(2.0);
        let mut state = 2.0f64;
        let mut lumps = Vec::new();
        while let Some(l) = p.next_lump(&mut prog, state, 0.0) {
            lumps.push(l.amount);
            state -= l.amount;
        }
        assert_eq!(lumps, vec![0.5, 0.5, 0.5, 0.5]);
        assert_eq!(state, 0.0);
    }

    #[test]
    fn chattering_eta_positive_schedules_lumps() {
        let p = ComponentPolicy::Chattering { m: 4, eta: 1.0 };
        let mut prog = p.start(2.0);
        // nothing due at the start
        assert!(p.next_lump(&mut prog, 2.0, 0.0).is_none());
        // first two lumps due by t = 0.5
        let l1 = p.next_lump(&mut prog, 2.0, 0.5).unwrap();
        assert_close(l1.at, 0.25, 1e-15, "t_1");
        assert_eq!(l1.amount, 0.5);
        let l2 = p.next_lump(&mut prog, 1.5, 0.5).unwrap();
        assert_close(l2.at, 0.5, 1e-15, "t_2");
        assert!(p.next_lump(&mut prog, 1.0, 0.5).is_none());
    }

    #[test]
    fn chattering_lump_clamped_by_state() {
        let p = ComponentPolicy::Chattering { m: 2, eta: 0.0 };
        let mut prog = p.start(2.0);
        // state dropped below the frozen lump size
        let l = p.next_lump(&mut prog, 0.3, 0.0).unwrap();
        assert_eq!(l.amount, 0.3);
    }

    #[test]
    fn barrier_projects_excess() {
        let p = ComponentPolicy::Barrier { x_star: 1.0 };
        let mut prog = p.start(1.4);
        assert_close(policy_events(&p, &mut prog, 1.4, 0.0), 0.4, 1e-12, "projection");
        assert_eq!(policy_events(&p, &mut prog, 0.9, 0.1), 0.0);
        let l = p.next_lump(&mut prog, 1.7, 0.2).unwrap();
        assert_close(l.amount, 0.7, 1e-12, "excess");
        assert_eq!(l.kind, LumpKind::BarrierProjection);
    }

    #[test]
    fn no_harvest_never_fires() {
        let p = ComponentPolicy::NoHarvest;
        let mut prog = p.start(5.0);
        assert_eq!(policy_events(&p, &mut prog, 5.0, 10.0), 0.0);
    }

    #[test]
    fn riemann_limit_of_chattering_sum() {
        // left-priced lump sum for m lumps from x down to 0 approaches
        // 2 theta sqrt(x); the integrand's endpoint singularity slows the
        // rate, so m = 1e4 only reaches ~0.7%
        let theta = 1.3f64;
        let x0 = 2.25f64;
        let m = 10_000u32;
        let price = PriceFn::PowerHalf { theta };
        let p = ComponentPolicy::Chattering { m, eta: 0.0 };
        let mut prog = p.start(x0);
        let mut state = x0;
        let mut total = 0.0;
        while let Some(l) = p.next_lump(&mut prog, state, 0.0) {
            total += price.eval(state) * l.amount;
            state -= l.amount;
        }
        let limit = 2.0 * theta * x0.sqrt();
        let rel = (limit - total) / limit;
        assert!(rel > 0.0 && rel < 0.01, "relative gap {rel}");
        // and the exact closed-form sum it should equal
        let exact: f64 = (1..=m)
            .map(|j| theta * (x0 - (j as f64 - 1.0) / m as f64 * x0).powf(-0.5) * x0 / m as f64)
            .sum();
        assert_close(total, exact, 1e-9, "left sum");
    }

    #[test]
    fn policy_validation() {
        assert!(ComponentPolicy::Chattering { m: 0, eta: 0.0 }.validate().is_err());
        assert!(ComponentPolicy::Chattering { m: 3, eta: -1.0 }.validate().is_err());
        assert!(ComponentPolicy::Barrier { x_star: 0.0 }.validate().is_err());
        assert!(Policy::new(vec![]).is_err());
        assert!(Policy::uniform(2, ComponentPolicy::TakeAll).is_ok());
    }

    #[test]
    fn policy_id_is_stable() {
        let p = Policy::new(vec![
            ComponentPolicy::Chattering { m: 10, eta: 0.0 },
            ComponentPolicy::Barrier { x_star: 1.5 },
        ])
        .unwrap();
        assert_eq!(p.id(), "chattering(m=10,eta=0)+barrier(x_star=1.5)");
    }
}

//! `harvest sweep`: re-solve across a parameter range and emit a tidy CSV
//! of regimes, thresholds, values, and bounds (one row per swept value per
//! component).

use harvest::analytic;
use harvest::bounds::bounds_report;
use harvest::model::{
    ComponentDynamics, DiffusionSpec, PriceFn, PriceSpec, ProblemSpec,
};

use crate::commands::solve::regime_name;
use crate::config::{DynamicsComponent, PriceComponent, ProblemConfig};
use crate::output::{fmt_f64, fmt_opt, Csv, Meta};
use crate::{CliError, SweepArgs, SweepParam};

const HEADER: [&str; 8] = [
    "param",
    "value",
    "component",
    "regime",
    "x_star",
    "phi",
    "lower",
    "upper_conservative",
];

fn parse_range(range: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::config(format!(
            "range `{range}` must be lo:hi:n"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::config(format!("bad range start `{}`", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::config(format!("bad range end `{}`", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| CliError::config(format!("bad range count `{}`", parts[2])))?;
    if n == 0 {
        return Err(CliError::config("range needs at least one point"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

fn param_name(p: SweepParam) -> &'static str {
    match p {
        SweepParam::Mu => "mu",
        SweepParam::Sigma => "sigma",
        SweepParam::Rho => "rho",
        SweepParam::Theta => "theta",
        SweepParam::CarryingCapacity => "carrying_capacity",
    }
}

/// Build the spec with the swept parameter overridden.
fn spec_with(
    cfg: &ProblemConfig,
    param: SweepParam,
    component: usize,
    value: f64,
) -> Result<ProblemSpec, CliError> {
    let n = cfg.dynamics.components.len();
    if component >= n {
        return Err(CliError::config(format!(
            "component {component} out of range (model has {n})"
        )));
    }
    let dynamics = DiffusionSpec::new(
        cfg.dynamics
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let hit = i == component;
                match *c {
                    DynamicsComponent::ArithmeticBm { mu, sigma } => {
                        ComponentDynamics::ArithmeticBm {
                            mu: if hit && param == SweepParam::Mu { value } else { mu },
                            sigma: if hit && param == SweepParam::Sigma {
                                value
                            } else {
                                sigma
                            },
                        }
                    }
                    DynamicsComponent::Logistic {
                        mu,
                        carrying_capacity,
                        sigma,
                    } => ComponentDynamics::Logistic {
                        mu: if hit && param == SweepParam::Mu { value } else { mu },
                        carrying_capacity: if hit && param == SweepParam::CarryingCapacity {
                            value
                        } else {
                            carrying_capacity
                        },
                        sigma: if hit && param == SweepParam::Sigma {
                            value
                        } else {
                            sigma
                        },
                    },
                }
            })
            .collect(),
    )
    .map_err(CliError::from_config_value)?;
    let rho = if param == SweepParam::Rho {
        value
    } else {
        cfg.prices.rho
    };
    let prices = PriceSpec::new(
        rho,
        cfg.prices
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| match *c {
                PriceComponent::PowerHalf { theta } => PriceFn::PowerHalf {
                    theta: if i == component && param == SweepParam::Theta {
                        value
                    } else {
                        theta
                    },
                },
                PriceComponent::Constant { p } => PriceFn::Constant { p },
            })
            .collect(),
    )
    .map_err(CliError::from_config_value)?;
    ProblemSpec::new(dynamics, prices).map_err(CliError::from_config_value)
}

pub fn run(args: SweepArgs) -> Result<(), CliError> {
    let cfg = ProblemConfig::load(&args.common.config)?;
    // validate the base config once up front
    cfg.build_spec()?;
    let values = parse_range(&args.range)?;
    let name = param_name(args.param);

    let mut csv = Csv::new(&Meta::now(args.common.no_meta), &HEADER);
    for &value in &values {
        let spec = spec_with(&cfg, args.param, args.component, value)?;
        let solution = analytic::solve(&spec)?;
        let phi = solution.value(cfg.s, &cfg.x0)?;
        let bounds = bounds_report(&spec, &cfg.x0, None)?;
        for (i, cv) in solution.components.iter().enumerate() {
            csv.row(&[
                name.to_string(),
                fmt_f64(value),
                i.to_string(),
                regime_name(cv.regime()).to_string(),
                fmt_opt(cv.x_star()),
                fmt_f64(phi),
                fmt_f64(bounds.lower),
                fmt_f64(bounds.upper_conservative),
            ]);
        }
    }
    csv.finish(args.common.out.as_deref())
}

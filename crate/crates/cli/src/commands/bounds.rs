//! `harvest bounds`: the chattering lower bound and the generator-supremum
//! upper bound, optionally refined by a Monte Carlo extinction estimate.

use serde::Serialize;

use harvest::analytic;
use harvest::bounds::{bounds_report, ComponentBound};
use harvest::policy::{ComponentPolicy, Policy};
use harvest::sim::estimate_extinction_discount;

use crate::config::ProblemConfig;
use crate::output::{write_json, Meta};
use crate::policies::parse_policies;
use crate::{BoundsArgs, CliError};

#[derive(Serialize)]
struct BoundsOutput {
    schema: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
    lower: f64,
    upper_conservative: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper_mc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extinction_discount: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_policy: Option<String>,
    per_component: Vec<ComponentBound>,
}

pub fn run(args: BoundsArgs) -> Result<(), CliError> {
    let cfg = ProblemConfig::load(&args.common.config)?;
    let spec = cfg.build_spec()?;

    let (discount, policy_id) = if args.with_mc {
        let policy = match &args.mc_policy {
            Some(name) => parse_policies(
                std::slice::from_ref(name),
                &spec,
                analytic::solve(&spec).ok().as_ref(),
            )?
            .remove(0),
            None => {
                // the solved optimal policy shape: chatter everything in the
                // chatter regime, reflect at the solved threshold otherwise
                let solution = analytic::solve(&spec).map_err(|e| {
                    CliError::unsupported(format!(
                        "cannot derive a default extinction policy ({e}); pass --mc-policy"
                    ))
                })?;
                let components: Vec<ComponentPolicy> = solution
                    .components
                    .iter()
                    .map(|cv| match cv.x_star() {
                        Some(x_star) => ComponentPolicy::Barrier { x_star },
                        None => ComponentPolicy::Chattering { m: 10_000, eta: 0.0 },
                    })
                    .collect();
                Policy::new(components).map_err(CliError::from)?
            }
        };
        let sim = cfg.sim_config(args.common.seed);
        let est = estimate_extinction_discount(&spec, &policy, &cfg.x0, &sim)?;
        (Some(est.censored_as_is.mean), Some(policy.id()))
    } else {
        (None, None)
    };

    let report = bounds_report(&spec, &cfg.x0, discount)?;
    let out = BoundsOutput {
        schema: 1,
        meta: Meta::now(args.common.no_meta),
        lower: report.lower,
        upper_conservative: report.upper_conservative,
        upper_mc: report.upper_mc,
        extinction_discount: discount,
        mc_policy: policy_id,
        per_component: report.per_component,
    };
    write_json(args.common.out.as_deref(), &out)
}

//! Policy names accepted on the command line.
//!
//! Grammar (comma separates whole policies, colon separates parameters):
//!
//! - `take_all`
//! - `no_harvest`
//! - `chatter[:m=N][:eta=X]` (defaults `m=10000`, `eta=0`)
//! - `barrier[:x=V | :scale=F]` -- without parameters the solved threshold
//!   of each component is used; `scale` multiplies it.

use harvest::analytic::AnalyticSolution;
use harvest::model::ProblemSpec;
use harvest::policy::{ComponentPolicy, Policy};

use crate::CliError;

pub fn parse_policies(
    names: &[String],
    spec: &ProblemSpec,
    solution: Option<&AnalyticSolution>,
) -> Result<Vec<Policy>, CliError> {
    names
        .iter()
        .flat_map(|s| s.split(','))
        .filter(|s| !s.is_empty())
        .map(|name| parse_one(name.trim(), spec, solution))
        .collect()
}

fn parse_one(
    name: &str,
    spec: &ProblemSpec,
    solution: Option<&AnalyticSolution>,
) -> Result<Policy, CliError> {
    let n = spec.n_components();
    let mut parts = name.split(':');
    let head = parts.next().unwrap_or_default();
    let params: Vec<&str> = parts.collect();
    let parse_kv = |p: &str| -> Result<(String, f64), CliError> {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("policy parameter `{p}` is not key=value")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| CliError::config(format!("policy parameter `{p}`: bad number")))?;
        Ok((k.to_string(), v))
    };
    match head {
        "take_all" => no_params(name, &params)
            .and_then(|_| Policy::uniform(n, ComponentPolicy::TakeAll).map_err(CliError::from)),
        "no_harvest" => no_params(name, &params)
            .and_then(|_| Policy::uniform(n, ComponentPolicy::NoHarvest).map_err(CliError::from)),
        "chatter" | "chattering" => {
            let mut m: u32 = 10_000;
            let mut eta = 0.0f64;
            for p in &params {
                let (k, v) = parse_kv(p)?;
                match k.as_str() {
                    "m" => m = v as u32,
                    "eta" => eta = v,
                    other => {
                        return Err(CliError::config(format!(
                            "unknown chatter parameter `{other}`"
                        )))
                    }
                }
            }
            Policy::uniform(n, ComponentPolicy::Chattering { m, eta }).map_err(CliError::from)
        }
        "barrier" => {
            let mut explicit: Option<f64> = None;
            let mut scale: Option<f64> = None;
            for p in &params {
                let (k, v) = parse_kv(p)?;
                match k.as_str() {
                    "x" | "x_star" => explicit = Some(v),
                    "scale" => scale = Some(v),
                    other => {
                        return Err(CliError::config(format!(
                            "unknown barrier parameter `{other}`"
                        )))
                    }
                }
            }
            let components: Result<Vec<ComponentPolicy>, CliError> = (0..n)
                .map(|i| {
                    let x_star = match explicit {
                        Some(v) => v,
                        None => {
                            let solved = solution
                                .and_then(|s| s.components[i].x_star())
                                .ok_or_else(|| CliError::unsupported(format!(
                                    "barrier policy for component {i} needs a solved threshold \
                                     (interior regime) or an explicit `barrier:x=VALUE`"
                                )))?;
                            solved * scale.unwrap_or(1.0)
                        }
                    };
                    Ok(ComponentPolicy::Barrier { x_star })
                })
                .collect();
            Policy::new(components?).map_err(CliError::from)
        }
        other => Err(CliError::config(format!(
            "unknown policy `{other}`; expected take_all, no_harvest, chatter, or barrier"
        ))),
    }
}

fn no_params(name: &str, params: &[&str]) -> Result<(), CliError> {
    if params.is_empty() {
        Ok(())
    } else {
        Err(CliError::config(format!("policy `{name}` takes no parameters")))
    }
}

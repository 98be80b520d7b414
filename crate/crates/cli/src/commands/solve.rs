//! `harvest solve`: closed-form regimes, thresholds, and value.

use serde::Serialize;

use harvest::analytic::{self, ComponentValue};
use harvest::model::{ComponentDynamics, PriceFn, Regime};
use harvest::specfun::PsiParams;

use crate::config::ProblemConfig;
use crate::output::{write_json, Meta};
use crate::{CliError, Format, SolveArgs};

#[derive(Serialize)]
struct SolveOutput {
    schema: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
    rho: f64,
    s: f64,
    x0: Vec<f64>,
    components: Vec<ComponentReport>,
    /// Value of the solved model at `(s, x0)`.
    phi: f64,
}

#[derive(Serialize, Default)]
struct ComponentReport {
    index: usize,
    kind: &'static str,
    regime: &'static str,
    theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_exp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b_param: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    z_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_coef: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a_const: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residuals: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduced_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold_residual: Option<f64>,
}

pub fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::ChatterToZero => "chatter_to_zero",
        Regime::InteriorThreshold => "interior_threshold",
    }
}

pub fn run(args: SolveArgs) -> Result<(), CliError> {
    if args.format == Format::Csv {
        return Err(CliError::unsupported("solve emits JSON only"));
    }
    let cfg = ProblemConfig::load(&args.common.config)?;
    let spec = cfg.build_spec()?;
    let solution = analytic::solve(&spec)?;
    let phi = solution.value(cfg.s, &cfg.x0)?;

    let rho = spec.prices.rho();
    let mut components = Vec::new();
    for (i, cv) in solution.components.iter().enumerate() {
        let dynamics = &spec.dynamics.components()[i];
        let theta = match &spec.prices.components()[i] {
            PriceFn::PowerHalf { theta } => *theta,
            _ => unreachable!("solve only succeeds for power-half prices"),
        };
        let mut report = ComponentReport {
            index: i,
            kind: dynamics.kind_name(),
            regime: regime_name(cv.regime()),
            theta,
            ..ComponentReport::default()
        };
        match dynamics {
            ComponentDynamics::ArithmeticBm { mu, sigma } => {
                let l = analytic::lambda_roots(*mu, *sigma, rho)?;
                report.lambda1 = Some(l.lambda1);
                report.lambda2 = Some(l.lambda2);
            }
            ComponentDynamics::Logistic {
                mu,
                carrying_capacity,
                sigma,
            } => {
                let p = PsiParams::new(*mu, *carrying_capacity, *sigma, rho)?;
                report.theta_exp = Some(p.theta_exp);
                report.b_param = Some(p.b_param);
                report.z_scale = Some(p.z_scale);
            }
            ComponentDynamics::General { .. } => {}
        }
        match cv {
            ComponentValue::BmBarrier { threshold, .. } => {
                report.x_star = Some(threshold.x_star);
                report.c_coef = Some(threshold.c_coef);
                report.a_const = Some(threshold.a_const);
                report.residuals = Some(threshold.residuals);
                report.reduced_residual = Some(threshold.reduced_residual);
            }
            ComponentValue::LogisticBarrier { threshold, .. } => {
                report.x_star = Some(threshold.x_star);
                report.threshold_residual = Some(threshold.residual);
            }
            _ => {}
        }
        components.push(report);
    }

    let out = SolveOutput {
        schema: 1,
        meta: Meta::now(args.common.no_meta),
        rho,
        s: cfg.s,
        x0: cfg.x0.clone(),
        components,
        phi,
    };
    write_json(args.common.out.as_deref(), &out)
}

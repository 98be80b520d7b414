//! `harvest verify`: grid check of the verification-theorem conditions for
//! the solved (or deliberately perturbed) candidate value function.

use serde::Serialize;

use harvest::analytic::verify::{grid_rows, verify_conditions, ConditionOutcome, Grid, PastingCheck};
use harvest::analytic::{self, AnalyticSolution, ComponentValue};
use harvest::specfun::psi_derivs;

use crate::config::ProblemConfig;
use crate::output::{fmt_f64, write_json, Csv, Meta};
use crate::{CandidateArg, CliError, VerifyArgs};

#[derive(Serialize)]
struct VerifyOutput {
    schema: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
    candidate: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    perturb_x_star: Option<f64>,
    gradient_dominates_price: ConditionOutcome,
    generator_nonpositive: ConditionOutcome,
    generator_zero_on_d: ConditionOutcome,
    d_points: usize,
    grid_points: usize,
    smooth_pasting: Vec<PastingCheck>,
}

/// Rescale every solved threshold by `factor`, rebuilding the constants
/// that the value-matching and price-matching equations pin; the curvature
/// equation is then genuinely violated, which is the point.
fn perturb(solution: &AnalyticSolution, factor: f64) -> Result<AnalyticSolution, CliError> {
    let mut out = solution.clone();
    for cv in &mut out.components {
        match cv {
            ComponentValue::BmBarrier { theta, threshold } => {
                let xs = threshold.x_star * factor;
                let l = threshold.lambda;
                let e1 = (l.lambda1 * xs).exp();
                let e2 = (l.lambda2 * xs).exp();
                let u0 = e1 - e2;
                let u1 = l.lambda1 * e1 - l.lambda2 * e2;
                let u2 = l.lambda1 * l.lambda1 * e1 - l.lambda2 * l.lambda2 * e2;
                threshold.x_star = xs;
                threshold.c_coef = *theta / (xs.sqrt() * u1);
                threshold.a_const = threshold.c_coef * u0;
                threshold.residuals = [
                    0.0,
                    0.0,
                    (threshold.c_coef * u2 + 0.5 * *theta * xs.powf(-1.5)).abs(),
                ];
                threshold.reduced_residual = (u1 / u2 + 2.0 * xs).abs();
            }
            ComponentValue::LogisticBarrier { threshold, .. } => {
                let xs = threshold.x_star * factor;
                let (d1, d2) = psi_derivs(xs, &threshold.params).map_err(CliError::from)?;
                threshold.x_star = xs;
                threshold.norm = xs.sqrt() * d1;
                threshold.residual = (xs * d2 + 0.5 * d1).abs();
            }
            _ => {}
        }
    }
    Ok(out)
}

pub fn run(args: VerifyArgs) -> Result<(), CliError> {
    let cfg = ProblemConfig::load(&args.common.config)?;
    let spec = cfg.build_spec()?;
    let grid_cfg = cfg
        .grid
        .as_ref()
        .ok_or_else(|| CliError::config("verify needs a `grid` section in the config"))?;
    let grid = Grid::new(
        grid_cfg.ranges.iter().map(|r| (r[0], r[1])).collect(),
        grid_cfg.points_per_axis,
    )
    .map_err(CliError::from_config_value)?;

    let (candidate_name, mut solution) = match args.candidate {
        CandidateArg::Solved => ("solved", analytic::solve(&spec)?),
        CandidateArg::Chatter => ("chattering_form", analytic::chattering_candidate(&spec)?),
    };
    if let Some(factor) = args.perturb_x_star {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(CliError::config(format!(
                "perturbation factor must be > 0, got {factor}"
            )));
        }
        solution = perturb(&solution, factor)?;
    }

    let report = verify_conditions(&solution, &spec, &grid)?;

    if let Some(csv_path) = &args.grid_csv {
        let rows = grid_rows(&solution, &spec, &grid)?;
        let n = spec.n_components();
        let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        header.extend(["value".to_string(), "generator".to_string(), "in_d".to_string()]);
        header.extend((0..n).map(|i| format!("gradient_margin{i}")));
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let mut csv = Csv::new(&Meta::now(args.common.no_meta), &header_refs);
        for row in &rows {
            let mut fields: Vec<String> = row.x.iter().map(|&v| fmt_f64(v)).collect();
            fields.push(fmt_f64(row.value));
            fields.push(fmt_f64(row.generator));
            fields.push(if row.in_d { "1".into() } else { "0".into() });
            fields.extend(row.gradient_margins.iter().map(|&v| fmt_f64(v)));
            csv.row(&fields);
        }
        csv.finish(Some(csv_path))?;
    }

    let out = VerifyOutput {
        schema: 1,
        meta: Meta::now(args.common.no_meta),
        candidate: candidate_name,
        perturb_x_star: args.perturb_x_star,
        gradient_dominates_price: report.gradient_bound,
        generator_nonpositive: report.generator_nonpositive,
        generator_zero_on_d: report.generator_zero_on_d,
        d_points: report.d_points,
        grid_points: report.grid_points,
        smooth_pasting: report.pasting,
    };
    write_json(args.common.out.as_deref(), &out)
}

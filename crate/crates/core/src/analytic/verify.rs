//! Grid verification of the candidate-value conditions: the gradient must
//! dominate the price everywhere, the discounted generator must be
//! nonpositive everywhere and vanish on the nonintervention region, and the
//! candidate must paste twice-differentiably across each threshold.
//!
//! All candidates factor as `e^{-rho s} v(x)`, so the check runs on `v` with
//! the discounted generator `(A - rho)`.

use serde::Serialize;

use crate::analytic::AnalyticSolution;
use crate::error::{Error, Result};
use crate::model::ProblemSpec;

/// Scaled tolerance for condition (gradient >= price).
pub const GRAD_TOL: f64 = 1e-7;
/// Scaled tolerance for the generator sign condition.
pub const GEN_TOL: f64 = 1e-7;
/// Scaled tolerance for the generator vanishing on the nonintervention set.
pub const GEN_TOL_ON_D: f64 = 1e-6;
/// Relative tolerance for the smooth-pasting derivative gaps.
pub const PASTING_TOL: f64 = 1e-6;

/// Rectangular evaluation grid, one linear range per component.
#[derive(Debug, Clone, Serialize)]
pub struct Grid {
    pub ranges: Vec<(f64, f64)>,
    pub points_per_axis: usize,
}

impl Grid {
    pub fn new(ranges: Vec<(f64, f64)>, points_per_axis: usize) -> Result<Self> {
        if ranges.is_empty() || points_per_axis < 2 {
            return Err(Error::invalid(
                "grid",
                "need at least one range and two points per axis",
            ));
        }
        for &(lo, hi) in &ranges {
            if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi <= lo {
                return Err(Error::Domain(format!(
                    "grid range ({lo}, {hi}) must satisfy 0 < lo < hi"
                )));
            }
        }
        Ok(Grid {
            ranges,
            points_per_axis,
        })
    }

    fn axis(&self, i: usize, k: usize) -> f64 {
        let (lo, hi) = self.ranges[i];
        lo + (hi - lo) * k as f64 / (self.points_per_axis - 1) as f64
    }

    fn total_points(&self) -> usize {
        self.points_per_axis.pow(self.ranges.len() as u32)
    }
}

/// One-sided derivatives of the two branches at a threshold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PastingDerivs {
    pub d1_left: f64,
    pub d1_right: f64,
    pub d2_left: f64,
    pub d2_right: f64,
}

/// A candidate value function on the state space.
///
/// Closed-form candidates supply analytic derivatives; black-box candidates
/// fall back to finite differences with steps chosen against the f64 noise
/// floor (`1e-5` scale for first derivatives, `2e-4` for second).
pub trait CandidateValue {
    fn value(&self, x: &[f64]) -> Result<f64>;

    fn partial(&self, _i: usize, _x: &[f64]) -> Option<Result<f64>> {
        None
    }

    fn second_partial(&self, _i: usize, _x: &[f64]) -> Option<Result<f64>> {
        None
    }

    /// Threshold of component `i`, if that component has one.
    fn threshold(&self, _i: usize) -> Option<f64> {
        None
    }

    /// Analytic one-sided derivatives at the threshold of component `i`.
    fn pasting_derivs(&self, _i: usize) -> Option<Result<PastingDerivs>> {
        None
    }
}

impl CandidateValue for AnalyticSolution {
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.value_undiscounted(x)
    }

    fn partial(&self, i: usize, x: &[f64]) -> Option<Result<f64>> {
        Some(self.components[i].d1(x[i]))
    }

    fn second_partial(&self, i: usize, x: &[f64]) -> Option<Result<f64>> {
        Some(self.components[i].d2(x[i]))
    }

    fn threshold(&self, i: usize) -> Option<f64> {
        self.components[i].x_star()
    }

    fn pasting_derivs(&self, i: usize) -> Option<Result<PastingDerivs>> {
        self.components[i].pasting_derivs()
    }
}

/// A black-box candidate checked purely through finite differences.
pub struct FnCandidate {
    pub f: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub thresholds: Vec<Option<f64>>,
}

impl CandidateValue for FnCandidate {
    fn value(&self, x: &[f64]) -> Result<f64> {
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("candidate not finite at {x:?}")))
        }
    }

    fn threshold(&self, i: usize) -> Option<f64> {
        self.thresholds.get(i).copied().flatten()
    }
}

/// Outcome of one verification condition over the grid. `worst` is the most
/// violating scaled margin encountered (positive margins satisfy the
/// condition with room to spare).
#[derive(Debug, Clone, Serialize)]
pub struct ConditionOutcome {
    pub pass: bool,
    pub worst: f64,
    pub worst_at: Vec<f64>,
    pub checked: usize,
}

impl ConditionOutcome {
    fn new() -> Self {
        ConditionOutcome {
            pass: true,
            worst: f64::INFINITY,
            worst_at: Vec::new(),
            checked: 0,
        }
    }

    fn record(&mut self, margin: f64, at: &[f64], tol: f64) {
        self.checked += 1;
        if margin < self.worst {
            self.worst = margin;
            self.worst_at = at.to_vec();
        }
        if margin < -tol {
            self.pass = false;
        }
    }
}

/// Smooth-pasting check of one component at its threshold.
#[derive(Debug, Clone, Serialize)]
pub struct PastingCheck {
    pub component: usize,
    pub x_star: f64,
    pub d1_rel_gap: f64,
    pub d2_rel_gap: f64,
    pub pass: bool,
}

/// Full verification report.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    /// Condition (gradient dominates price), scaled by `max(1, pi)`.
    pub gradient_bound: ConditionOutcome,
    /// Condition (generator nonpositive), scaled by `rho max(1, |v|)`.
    pub generator_nonpositive: ConditionOutcome,
    /// Condition (generator vanishes on the nonintervention region D),
    /// scaled the same way; `worst` is the negated worst `|Lv|` margin.
    pub generator_zero_on_d: ConditionOutcome,
    pub d_points: usize,
    pub grid_points: usize,
    pub pasting: Vec<PastingCheck>,
}

struct Derivs {
    d1: f64,
    d2: f64,
}

fn fd_derivs(cand: &dyn CandidateValue, x: &[f64], i: usize) -> Result<Derivs> {
    let xi = x[i];
    let h1 = 1e-5 * xi.abs().max(1.0);
    let h2 = 2e-4 * xi.abs().max(1.0);
    let seam = cand.threshold(i);
    // keep stencils from straddling the pasting seam
    let one_sided = seam.map(|xs| (xi - xs).abs() < 2.0 * h2).unwrap_or(false);
    let at = |v: f64| -> Result<f64> {
        let mut y = x.to_vec();
        y[i] = v;
        cand.value(&y)
    };
    let (d1, d2);
    if one_sided {
        let dir = if xi >= seam.unwrap() { 1.0 } else { -1.0 };
        let f0 = at(xi)?;
        let f1 = at(xi + dir * h1)?;
        let f2 = at(xi + 2.0 * dir * h1)?;
        d1 = dir * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h1);
        let g1 = at(xi + dir * h2)?;
        let g2 = at(xi + 2.0 * dir * h2)?;
        let g3 = at(xi + 3.0 * dir * h2)?;
        d2 = (2.0 * f0 - 5.0 * g1 + 4.0 * g2 - g3) / (h2 * h2);
    } else {
        d1 = (at(xi + h1)? - at(xi - h1)?) / (2.0 * h1);
        d2 = (at(xi + h2)? - 2.0 * at(xi)? + at(xi - h2)?) / (h2 * h2);
    }
    Ok(Derivs { d1, d2 })
}

fn derivs(cand: &dyn CandidateValue, x: &[f64], i: usize) -> Result<Derivs> {
    match (cand.partial(i, x), cand.second_partial(i, x)) {
        (Some(d1), Some(d2)) => Ok(Derivs { d1: d1?, d2: d2? }),
        _ => fd_derivs(cand, x, i),
    }
}

fn fd_pasting(cand: &dyn CandidateValue, x_base: &[f64], i: usize, xs: f64) -> Result<PastingDerivs> {
    let h = 1e-5 * xs.abs().max(1.0);
    let h2 = 5e-4 * xs.abs().max(1.0);
    let at = |v: f64| -> Result<f64> {
        let mut y = x_base.to_vec();
        y[i] = v;
        cand.value(&y)
    };
    let side = |dir: f64| -> Result<(f64, f64)> {
        let f0 = at(xs)?;
        let f1 = at(xs + dir * h)?;
        let f2 = at(xs + 2.0 * dir * h)?;
        let d1 = dir * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
        let g1 = at(xs + dir * h2)?;
        let g2 = at(xs + 2.0 * dir * h2)?;
        let g3 = at(xs + 3.0 * dir * h2)?;
        let d2 = (2.0 * f0 - 5.0 * g1 + 4.0 * g2 - g3) / (h2 * h2);
        Ok((d1, d2))
    };
    let (d1_left, d2_left) = side(-1.0)?;
    let (d1_right, d2_right) = side(1.0)?;
    Ok(PastingDerivs {
        d1_left,
        d1_right,
        d2_left,
        d2_right,
    })
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// One evaluated grid point, for diagnostic output.
#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub x: Vec<f64>,
    pub value: f64,
    /// `(A - rho) v` at the point.
    pub generator: f64,
    pub in_d: bool,
    /// Per-component scaled margins of the gradient condition.
    pub gradient_margins: Vec<f64>,
}

/// Evaluate the candidate on every grid point.
pub fn grid_rows(
    cand: &dyn CandidateValue,
    spec: &ProblemSpec,
    grid: &Grid,
) -> Result<Vec<GridRow>> {
    let n = spec.n_components();
    if grid.ranges.len() != n {
        return Err(Error::invalid(
            "grid",
            format!("grid has {} ranges, spec has {n} components", grid.ranges.len()),
        ));
    }
    let rho = spec.prices.rho();
    let total = grid.total_points();
    let mut rows = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0f64; n];
    for _ in 0..total {
        for i in 0..n {
            x[i] = grid.axis(i, idx[i]);
        }
        let v = cand.value(&x)?;
        let mut lv = -rho * v;
        let mut in_d = true;
        let mut margins = Vec::with_capacity(n);
        for i in 0..n {
            let d = derivs(cand, &x, i)?;
            let pi = spec.prices.components()[i].eval(x[i]);
            margins.push((d.d1 - pi) / pi.abs().max(1.0));
            if d.d1 <= pi {
                in_d = false;
            }
            let dynamics = &spec.dynamics.components()[i];
            let vol = dynamics.vol(x[i]);
            lv += dynamics.drift(x[i]) * d.d1 + 0.5 * vol * vol * d.d2;
        }
        rows.push(GridRow {
            x: x.clone(),
            value: v,
            generator: lv,
            in_d,
            gradient_margins: margins,
        });
        // advance the cartesian index
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < grid.points_per_axis {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(rows)
}

/// Check the verification-theorem conditions for `cand` on `grid`.
pub fn verify_conditions(
    cand: &dyn CandidateValue,
    spec: &ProblemSpec,
    grid: &Grid,
) -> Result<VerificationReport> {
    let n = spec.n_components();
    let rho = spec.prices.rho();

    let mut gradient = ConditionOutcome::new();
    let mut gen_nonpos = ConditionOutcome::new();
    let mut gen_zero = ConditionOutcome::new();
    let mut d_points = 0usize;

    let rows = grid_rows(cand, spec, grid)?;
    let total = rows.len();
    for row in &rows {
        for &margin in &row.gradient_margins {
            gradient.record(margin, &row.x, GRAD_TOL);
        }
        let scale = rho * row.value.abs().max(1.0);
        // condition: Lv <= 0 everywhere (margin positive when satisfied)
        gen_nonpos.record(-row.generator / scale, &row.x, GEN_TOL);
        if row.in_d {
            d_points += 1;
            gen_zero.record(-row.generator.abs() / scale, &row.x, GEN_TOL_ON_D);
        }
    }

    for c in [&mut gradient, &mut gen_nonpos, &mut gen_zero] {
        if c.checked == 0 {
            c.worst = 0.0;
        }
    }

    // smooth pasting at each threshold
    let mut pasting = Vec::new();
    let mid: Vec<f64> = grid.ranges.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
    for i in 0..n {
        if let Some(xs) = cand.threshold(i) {
            let pd = match cand.pasting_derivs(i) {
                Some(pd) => pd?,
                None => fd_pasting(cand, &mid, i, xs)?,
            };
            let d1_rel_gap = rel_gap(pd.d1_left, pd.d1_right);
            let d2_rel_gap = rel_gap(pd.d2_left, pd.d2_right);
            pasting.push(PastingCheck {
                component: i,
                x_star: xs,
                d1_rel_gap,
                d2_rel_gap,
                pass: d1_rel_gap <= PASTING_TOL && d2_rel_gap <= PASTING_TOL,
            });
        }
    }

    Ok(VerificationReport {
        gradient_bound: gradient,
        generator_nonpositive: gen_nonpos,
        generator_zero_on_d: gen_zero,
        d_points,
        grid_points: total,
        pasting,
    })
}

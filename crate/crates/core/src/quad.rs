//! Adaptive Simpson quadrature for prices without closed-form integrals.
//!
//! Integrals from zero substitute `v = t^4` first, which turns any
//! singularity milder than `v^{-3/4}` (inverse-square-root price growth in
//! particular) into an integrand that vanishes at the endpoint.

use crate::error::{Error, Result};

const MAX_DEPTH: usize = 52;

/// Integrate `f` over `[a, b]` to the given relative tolerance.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("quadrature limits must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = eval(f, a)?;
    let fb = eval(f, b)?;
    let m = 0.5 * (a + b);
    let fm = eval(f, m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, fa, b, fb, m, fm, whole, rel_tol, MAX_DEPTH)
}

/// Integrate `f` over `[0, x]` with an endpoint that may carry an integrable
/// singularity such as `v^{-1/2}`.
pub fn integrate_from_zero(f: &dyn Fn(f64) -> f64, x: f64, rel_tol: f64) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::Domain(format!(
            "integral from zero needs finite x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // v = t^4, dv = 4 t^3 dt; the transformed integrand tends to zero at the
    // origin for any singularity milder than v^{-3/4}
    let g = move |t: f64| {
        if t == 0.0 {
            0.0
        } else {
            let t3 = t * t * t;
            4.0 * t3 * f(t3 * t)
        }
    };
    integrate(&g, 0.0, x.powf(0.25), rel_tol).map_err(|e| match e {
        Error::Numeric(_) => Error::Domain(
            "integral from zero did not converge; price too singular near zero".into(),
        ),
        other => other,
    })
}

fn eval(f: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!(
            "integrand is not finite at {x}; non-integrable singularity?"
        )))
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    rel_tol: f64,
    depth: usize,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(f, lm)?;
    let frm = eval(f, rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let refined = left + right;
    let err = refined - whole;
    if err.abs() <= 15.0 * rel_tol * refined.abs().max(1e-300) || err.abs() < 1e-300 {
        return Ok(refined + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "adaptive quadrature did not converge near [{a}, {b}]"
        )));
    }
    let l = simpson(f, a, fa, m, fm, lm, flm, left, rel_tol, depth - 1)?;
    let r = simpson(f, m, fm, b, fb, rm, frm, right, rel_tol, depth - 1)?;
    Ok(l + r)
}

//! Special-function kernel: Kummer's confluent hypergeometric `M(a, b, z)`
//! and the increasing fundamental solution `psi` of the discounted logistic
//! generator equation, with analytic first and second derivatives.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest `|z|` the series kernel accepts. Beyond this the caller gets an
/// explicit range error instead of silent accuracy loss.
pub const KUMMER_MAX_Z: f64 = 50.0;

const MAX_TERMS: usize = 10_000;
const TERM_EPS: f64 = 1e-16;

/// Kummer's `M(a, b, z) = sum_k (a)_k z^k / ((b)_k k!)`.
///
/// Negative arguments route through the transformation
/// `M(a, b, z) = e^z M(b - a, b, -z)` so the series is always summed with a
/// nonnegative argument (the direct alternating series loses all precision
/// already for moderately negative `z`).
pub fn kummer_m(a: f64, b: f64, z: f64) -> Result<f64> {
    for (name, v) in [("a", a), ("b", b), ("z", z)] {
        if !v.is_finite() {
            return Err(Error::invalid(name, format!("must be finite, got {v}")));
        }
    }
    if b <= 0.0 && b == b.floor() {
        return Err(Error::Domain(format!(
            "M(a, b, z) undefined for b a nonpositive integer, got b = {b}"
        )));
    }
    if z.abs() > KUMMER_MAX_Z {
        return Err(Error::Range(format!(
            "|z| = {} exceeds supported range {KUMMER_MAX_Z}",
            z.abs()
        )));
    }
    if z < 0.0 {
        Ok(z.exp() * series(b - a, b, -z))
    } else {
        Ok(series(a, b, z))
    }
}

/// `d/dz M(a, b, z) = (a/b) M(a+1, b+1, z)`.
pub fn kummer_m_dz(a: f64, b: f64, z: f64) -> Result<f64> {
    Ok(a / b * kummer_m(a + 1.0, b + 1.0, z)?)
}

fn series(a: f64, b: f64, z: f64) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * z / ((b + kf) * (kf + 1.0));
        sum += term;
        if term.abs() <= TERM_EPS * sum.abs() {
            break;
        }
    }
    sum
}

/// Parameters of `psi(x) = x^theta M(theta, 2 theta + 2 mu / sigma^2,
/// (2 mu / (K sigma^2)) x)` for the logistic diffusion discounted at `rho`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PsiParams {
    pub theta_exp: f64,
    pub b_param: f64,
    pub z_scale: f64,
    pub mu: f64,
    pub sigma: f64,
    pub carrying_capacity: f64,
    pub rho: f64,
}

impl PsiParams {
    pub fn new(mu: f64, carrying_capacity: f64, sigma: f64, rho: f64) -> Result<Self> {
        for (name, v) in [
            ("mu", mu),
            ("carrying_capacity", carrying_capacity),
            ("sigma", sigma),
            ("rho", rho),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        let s2 = sigma * sigma;
        let half_minus = 0.5 - mu / s2;
        let theta_exp = half_minus + (half_minus * half_minus + 2.0 * rho / s2).sqrt();
        let b_param = 2.0 * theta_exp + 2.0 * mu / s2;
        let z_scale = 2.0 * mu / (carrying_capacity * s2);
        debug_assert!(theta_exp > 0.0 && b_param > 0.0);
        Ok(PsiParams {
            theta_exp,
            b_param,
            z_scale,
            mu,
            sigma,
            carrying_capacity,
            rho,
        })
    }

    /// Largest `x` the kernel supports for these parameters.
    pub fn max_x(&self) -> f64 {
        KUMMER_MAX_Z / self.z_scale
    }
}

/// The increasing solution of `(A - rho) u = 0` for the logistic generator
/// `A = (sigma^2 x^2 / 2) d^2/dx^2 + mu x (1 - x/K) d/dx`.
pub fn psi(x: f64, p: &PsiParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("psi needs x > 0, got {x}")));
    }
    let m = kummer_m(p.theta_exp, p.b_param, p.z_scale * x)?;
    Ok(x.powf(p.theta_exp) * m)
}

/// `(psi'(x), psi''(x))` via term-wise differentiation of the series.
pub fn psi_derivs(x: f64, p: &PsiParams) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("psi needs x > 0, got {x}")));
    }
    let th = p.theta_exp;
    let b = p.b_param;
    let c = p.z_scale;
    let z = c * x;
    let m0 = kummer_m(th, b, z)?;
    let m1 = th / b * kummer_m(th + 1.0, b + 1.0, z)?;
    let m2 = th * (th + 1.0) / (b * (b + 1.0)) * kummer_m(th + 2.0, b + 2.0, z)?;
    let xp = x.powf(th);
    let d1 = th * xp / x * m0 + xp * c * m1;
    let d2 = th * (th - 1.0) * xp / (x * x) * m0 + 2.0 * th * xp / x * c * m1 + xp * c * c * m2;
    Ok((d1, d2))
}

/// Residual of the defining equation `(A - rho) psi` at `x`, for diagnostics
/// and verification.
pub fn psi_ode_residual(x: f64, p: &PsiParams) -> Result<f64> {
    let v = psi(x, p)?;
    let (d1, d2) = psi_derivs(x, p)?;
    let s2 = p.sigma * p.sigma;
    Ok(0.5 * s2 * x * x * d2 + p.mu * x * (1.0 - x / p.carrying_capacity) * d1 - p.rho * v)
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

    /// Independent oracle: plain 200-term summation with no recurrence
    /// shortcuts and no transformation.
    fn m_oracle(a: f64, b: f64, z: f64) -> f64 {
        let mut sum = 0.0f64;
        for k in (0..200usize).rev() {
            // Horner-free: accumulate term k directly
            let mut t = 1.0f64;
            for j in 0..k {
                let jf = j as f64;
                t *= (a + jf) * z / ((b + jf) * (jf + 1.0));
            }
            sum += t;
        }
        sum
    }

    #[test]
    fn m_at_zero_is_one() {
        assert_eq!(kummer_m(0.7, 1.3, 0.0).unwrap(), 1.0);
        assert_eq!(kummer_m(-2.5, 4.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn m_with_zero_a_is_one() {
        assert_eq!(kummer_m(0.0, 2.0, 5.0).unwrap(), 1.0);
    }

    #[test]
    fn m_identity_expm1() {
        // M(1, 2, z) = (e^z - 1)/z
        let z = 1.0f64;
        let want = z.exp_m1() / z; // 1.7182818284590452
        assert_close(kummer_m(1.0, 2.0, z).unwrap(), want, 1e-14, "M(1,2,1)");
        assert_close(m_oracle(1.0, 2.0, z), want, 1e-14, "oracle M(1,2,1)");
    }

    #[test]
    fn m_matches_reference_values() {
        // frozen from a 50-digit evaluation of the series
        assert_close(
            kummer_m(0.5, 1.5, 2.5).unwrap(),
            3.1222774531290055,
            1e-13,
            "M(0.5,1.5,2.5)",
        );
        assert_close(
            kummer_m(2.0, 3.0, -4.0).unwrap(),
            0.11355272569454114,
            1e-12,
            "M(2,3,-4)",
        );
        assert_close(
            kummer_m(0.112, 8.22, 8.0).unwrap(),
            1.2237487772642673,
            1e-13,
            "M(0.112,8.22,8)",
        );
    }

    #[test]
    fn m_oracle_cross_check_positive_z() {
        for &(a, b, z) in &[(0.7, 1.3, 0.9), (2.3, 5.1, 7.0), (0.11, 8.2, 12.0)] {
            assert_close(
                kummer_m(a, b, z).unwrap(),
                m_oracle(a, b, z),
                1e-12,
                "series vs oracle",
            );
        }
    }

    #[test]
    fn m_kummer_transformation() {
        // |M(a,b,z) - e^z M(b-a, b, -z)| < 1e-10 e^z on sampled points
        let mut s = 0x243F6A8885A308D3u64;
        let mut unit = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / 9007199254740992.0
        };
        for _ in 0..200 {
            let a = 0.1 + 2.9 * unit();
            let b = 0.5 + 7.5 * unit();
            let z = -20.0 + 40.0 * unit();
            let lhs = kummer_m(a, b, z).unwrap();
            let rhs = z.exp() * kummer_m(b - a, b, -z).unwrap();
            assert!(
                (lhs - rhs).abs() < 1e-10 * z.exp(),
                "transform failed at ({a}, {b}, {z}): {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn m_dz_identity_vs_finite_difference() {
        for &(a, b, z) in &[(0.7, 1.3, 0.4), (1.5, 2.5, 3.0), (0.11, 8.2, 6.0)] {
            let h = 1e-5;
            let fd = (kummer_m(a, b, z + h).unwrap() - kummer_m(a, b, z - h).unwrap()) / (2.0 * h);
            let an = kummer_m_dz(a, b, z).unwrap();
            assert_close(an, fd, 1e-8, "dM/dz");
        }
    }

    #[test]
    fn m_domain_and_range_errors() {
        assert!(matches!(kummer_m(1.0, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(kummer_m(1.0, -3.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(kummer_m(1.0, 2.0, 60.0), Err(Error::Range(_))));
        assert!(matches!(kummer_m(1.0, 2.0, -60.0), Err(Error::Range(_))));
        assert!(kummer_m(1.0, f64::NAN, 1.0).is_err());
        // b = -2.5 is not an integer, fine
        assert!(kummer_m(1.0, -2.5, 1.0).is_ok());
    }

    fn logistic_params() -> PsiParams {
        PsiParams::new(1.0, 1.0, 0.5, 0.1).unwrap()
    }

    #[test]
    fn psi_params_match_reference() {
        let p = logistic_params();
        assert_close(p.theta_exp, 0.11247837363768864, 1e-14, "theta");
        assert_close(p.b_param, 8.224956747275377, 1e-14, "b");
        assert_close(p.z_scale, 8.0, 1e-15, "z_scale");
        assert!(p.theta_exp > 0.0 && p.b_param > 0.0);
    }

    #[test]
    fn psi_reference_values() {
        // frozen from a 50-digit evaluation
        let p = logistic_params();
        assert_close(psi(1.0, &p).unwrap(), 1.2245217666793661, 1e-13, "psi(1)");
        let (d1, d2) = psi_derivs(1.0, &p).unwrap();
        assert_close(d1, 0.6056972430200936, 1e-12, "psi'(1)");
        assert_close(d2, 0.9796174133434928, 1e-12, "psi''(1)");
    }

    #[test]
    fn psi_behaves_like_power_near_zero() {
        let p = logistic_params();
        for x in [1e-8, 1e-6, 1e-4] {
            let ratio = psi(x, &p).unwrap() / x.powf(p.theta_exp);
            assert_close(ratio, 1.0, 1e-3, "psi/x^theta");
        }
    }

    #[test]
    fn psi_strictly_increasing() {
        let p = logistic_params();
        assert!(psi(1.0, &p).unwrap() < psi(2.0, &p).unwrap());
        let (d1, _) = psi_derivs(0.3, &p).unwrap();
        assert!(d1 > 0.0);
    }

    #[test]
    fn psi_derivs_match_finite_differences() {
        let p = logistic_params();
        for x in [0.5f64, 1.0, 2.0] {
            // Richardson-extrapolated central difference; the plain stencil's
            // h^2 truncation term is above 1e-10 relative at these scales
            let h = 1e-4 * x.max(1.0);
            let (d1, d2) = psi_derivs(x, &p).unwrap();
            let cd = |h: f64| {
                (psi(x + h, &p).unwrap() - psi(x - h, &p).unwrap()) / (2.0 * h)
            };
            let fd1 = (4.0 * cd(0.5 * h) - cd(h)) / 3.0;
            assert_close(d1, fd1, 1e-10, "psi' vs fd");
            let h2 = 2e-4 * x.max(1.0);
            let fd2 = (psi(x + h2, &p).unwrap() - 2.0 * psi(x, &p).unwrap()
                + psi(x - h2, &p).unwrap())
                / (h2 * h2);
            assert_close(d2, fd2, 1e-6, "psi'' vs fd");
        }
    }

    #[test]
    fn psi_theta_power_limit_of_curvature() {
        // x psi''/psi' -> theta - 1 as x -> 0+
        let p = logistic_params();
        let x = 1e-7;
        let (d1, d2) = psi_derivs(x, &p).unwrap();
        assert_close(x * d2 / d1, p.theta_exp - 1.0, 1e-4, "curvature limit");
    }

    #[test]
    fn psi_ode_residual_on_log_grid() {
        // the defining property: |(A - rho) psi| < 1e-8 max(1, |psi|)
        // on a log grid in [1e-3 K, 3 K]
        let p = logistic_params();
        let n = 60;
        for i in 0..=n {
            let x = 1e-3 * (3.0f64 / 1e-3).powf(i as f64 / n as f64);
            let r = psi_ode_residual(x, &p).unwrap();
            let scale = psi(x, &p).unwrap().abs().max(1.0);
            assert!(
                r.abs() < 1e-8 * scale,
                "ODE residual {r} too large at x = {x}"
            );
        }
    }

    #[test]
    fn psi_rejects_nonpositive_x() {
        let p = logistic_params();
        assert!(matches!(psi(0.0, &p), Err(Error::Domain(_))));
        assert!(matches!(psi(-1.0, &p), Err(Error::Domain(_))));
        assert!(psi_derivs(-1.0, &p).is_err());
    }

    #[test]
    fn psi_params_reject_bad_input() {
        assert!(PsiParams::new(0.0, 1.0, 0.5, 0.1).is_err());
        assert!(PsiParams::new(1.0, 1.0, 0.5, -0.1).is_err());
        assert!(PsiParams::new(1.0, f64::NAN, 0.5, 0.1).is_err());
    }
}

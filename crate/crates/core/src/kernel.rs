//! The piecewise-linear Simpson kernel and the moment constants derived from it.
//!
//! `m(t) = t - 1/6` on `[0, 1/2)` and `t - 5/6` on `[1/2, 1]`. Every bound in
//! [`crate::bounds`] is a Hölder or power-mean estimate of `∫ |m| |f'|`, so its constants
//! are moments of `|m|` over one half of the unit interval.

use num_rational::Ratio;
use thiserror::Error;

use crate::quadrature::{integrate_with_breakpoints, QuadratureError, QuadratureResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel argument {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("moment exponent must be >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("quadrature failed: {0}")]
    Quadrature(QuadratureError),
}

/// Above this exponent the moment is evaluated in log space.
pub const LOG_SPACE_THRESHOLD: f64 = 50.0;

pub fn eval_m(t: f64) -> Result<f64, KernelError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(KernelError::OutOfRange(t));
    }
    Ok(if t < 0.5 { t - 1.0 / 6.0 } else { t - 5.0 / 6.0 })
}

/// `∫_0^{1/2} |t - 1/6|^p dt = (1 + 2^{p+1}) / (6^{p+1} (p + 1))`, which also equals
/// `∫_{1/2}^1 |t - 5/6|^p dt`.
pub fn moment_p(p: f64) -> Result<f64, KernelError> {
    if !(p >= 1.0) {
        return Err(KernelError::InvalidExponent(p));
    }
    if p.fract() == 0.0 {
        if let Some(r) = moment_rational(p as u32) {
            return Ok(ratio_to_f64(r));
        }
    }
    if p > LOG_SPACE_THRESHOLD {
        return Ok(ln_moment_p(p)?.exp());
    }
    Ok((1.0 + 2f64.powf(p + 1.0)) / (6f64.powf(p + 1.0) * (p + 1.0)))
}

/// Natural log of [`moment_p`], finite for every `p >= 1`.
pub fn ln_moment_p(p: f64) -> Result<f64, KernelError> {
    if !(p >= 1.0) {
        return Err(KernelError::InvalidExponent(p));
    }
    let e = p + 1.0;
    // ln(1 + 2^e) = e ln 2 + ln(1 + 2^-e)
    let ln_num = e * std::f64::consts::LN_2 + (-e * std::f64::consts::LN_2).exp().ln_1p();
    Ok(ln_num - e * 6f64.ln() - e.ln())
}

/// Exact moment for integral exponents while numerator and denominator fit in `i128`.
pub fn moment_rational(p: u32) -> Option<Ratio<i128>> {
    if p == 0 {
        return None;
    }
    let e = p.checked_add(1)?;
    let num = 2i128.checked_pow(e)?.checked_add(1)?;
    let den = 6i128.checked_pow(e)?.checked_mul(i128::from(e))?;
    Some(Ratio::new(num, den))
}

/// Weighted half-interval moments `∫|m|(1-t)` and `∫|m| t` on each half, as exact rationals:
/// `(left·(1-t), left·t, right·(1-t), right·t) = (61, 29, 29, 61) / 1296`.
pub fn weighted_moments_rational() -> [Ratio<i128>; 4] {
    // ∫_0^{1/6}(1/6 - t)w + ∫_{1/6}^{1/2}(t - 1/6)w, and mirrored, with w = 1-t or t,
    // each integral evaluated from the polynomial antiderivative at rational points.
    let r = |n: i128, d: i128| Ratio::new(n, d);
    let seg = |lo: Ratio<i128>, hi: Ratio<i128>, c: Ratio<i128>, sign: i128, weight_is_t: bool| {
        // integrand sign*(t - c) * w(t); w = t or (1 - t)
        let anti = |t: Ratio<i128>| {
            let t2 = t * t;
            let t3 = t2 * t;
            // ∫(t - c) t dt = t^3/3 - c t^2/2 ; ∫(t - c)(1 - t) dt = t^2/2 - c t - t^3/3 + c t^2/2
            if weight_is_t {
                t3 / 3 - c * t2 / 2
            } else {
                t2 / 2 - c * t - t3 / 3 + c * t2 / 2
            }
        };
        (anti(hi) - anti(lo)) * sign
    };
    let (zero, sixth, half, five_sixths, one) = (r(0, 1), r(1, 6), r(1, 2), r(5, 6), r(1, 1));
    let left = |w: bool| seg(zero, sixth, sixth, -1, w) + seg(sixth, half, sixth, 1, w);
    let right = |w: bool| seg(half, five_sixths, five_sixths, -1, w) + seg(five_sixths, one, five_sixths, 1, w);
    [left(false), left(true), right(false), right(true)]
}

/// `(w_left_a, w_left_b, w_right_a, w_right_b)` as doubles.
pub fn weighted_moments() -> (f64, f64, f64, f64) {
    let [a, b, c, d] = weighted_moments_rational().map(ratio_to_f64);
    (a, b, c, d)
}

/// `(∫_0^{1/2} (1-t) dt, ∫_0^{1/2} t dt) = (3/8, 1/8)`; the upper half mirrors to `(1/8, 3/8)`.
pub fn half_weights() -> (f64, f64) {
    (0.375, 0.125)
}

/// [`moment_p`] by adaptive quadrature of `|t - 1/6|^p` over `[0, 1/2]`, split at the kink.
pub fn moment_by_quadrature(p: f64, abs_tol: f64) -> Result<QuadratureResult, KernelError> {
    if !(p >= 1.0) {
        return Err(KernelError::InvalidExponent(p));
    }
    integrate_with_breakpoints(|t| (t - 1.0 / 6.0).abs().powf(p), 0.0, 0.5, &[1.0 / 6.0], abs_tol)
        .map_err(KernelError::Quadrature)
}

fn ratio_to_f64(r: Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        assert_eq!(eval_m(0.0).unwrap(), -1.0 / 6.0);
        assert_eq!(eval_m(1.0 / 6.0).unwrap(), 0.0);
        assert_eq!(eval_m(0.5).unwrap(), 0.5 - 5.0 / 6.0);
        assert!((eval_m(0.5).unwrap() + 1.0 / 3.0).abs() < 1e-16);
        assert!((eval_m(1.0).unwrap() - 1.0 / 6.0).abs() < 1e-16);
        assert!(eval_m(-0.01).is_err());
        assert!(eval_m(1.01).is_err());
        assert!(eval_m(f64::NAN).is_err());
    }

    #[test]
    fn jump_at_half() {
        let left = eval_m(0.5 - 1e-12).unwrap();
        let right = eval_m(0.5).unwrap();
        assert!((left - 1.0 / 3.0).abs() < 1e-11);
        assert!((right - left + 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn closed_form_moments() {
        assert_eq!(moment_rational(1), Some(Ratio::new(5, 72)));
        assert_eq!(moment_rational(2), Some(Ratio::new(1, 72)));
        assert_eq!(moment_rational(3), Some(Ratio::new(17, 5184)));
        assert!((moment_p(1.0).unwrap() - 5.0 / 72.0).abs() < 1e-17);
        assert!((moment_p(2.0).unwrap() - 9.0 / 648.0).abs() < 1e-17);
        assert!((moment_p(3.0).unwrap() - 17.0 / 5184.0).abs() < 1e-18);
        assert!(moment_p(0.99).is_err());
        assert!(moment_p(f64::NAN).is_err());
    }

    #[test]
    fn log_space_agrees_and_survives_huge_p() {
        for p in [1.0, 2.5, 10.0, 40.0, 49.5] {
            let direct = (1.0 + 2f64.powf(p + 1.0)) / (6f64.powf(p + 1.0) * (p + 1.0));
            let via_log = ln_moment_p(p).unwrap().exp();
            assert!((direct - via_log).abs() <= 1e-13 * direct, "p={p}");
        }
        let ln = ln_moment_p(1000.0).unwrap();
        assert!(ln.is_finite() && ln < 0.0);
        assert!(moment_p(1000.0).unwrap() >= 0.0);
        assert!(moment_p(60.0).unwrap() > 0.0);
        assert!(moment_rational(200).is_none());
    }

    #[test]
    fn quadrature_oracle_agrees() {
        for p in [1.0, 1.5, 2.0, 3.0, 7.0, 10.0] {
            let r = moment_by_quadrature(p, 1e-14).unwrap();
            assert!((r.value - moment_p(p).unwrap()).abs() <= 1e-10, "p={p}");
        }
        assert!(moment_by_quadrature(0.5, 1e-14).is_err());
    }

    #[test]
    fn exact_weight_identities() {
        let w = weighted_moments_rational();
        assert_eq!(w, [Ratio::new(61, 1296), Ratio::new(29, 1296), Ratio::new(29, 1296), Ratio::new(61, 1296)]);
        assert_eq!(w[0] + w[1], Ratio::new(5, 72));
        assert_eq!(w[2] + w[3], Ratio::new(5, 72));
        let (a, b, c, d) = weighted_moments();
        assert!((a - 0.0470679).abs() < 1e-7);
        assert_eq!((b, c), (29.0 / 1296.0, 29.0 / 1296.0));
        assert_eq!(d, 61.0 / 1296.0);
        let (h1, h2) = half_weights();
        assert_eq!((h1, h2), (3.0 / 8.0, 1.0 / 8.0));
        assert_eq!(h1 + h2, 0.5);
    }
}

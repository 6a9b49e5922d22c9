//! Gaussian tail primitives.
//!
//! Everything the likelihoods and information matrices need from the standard
//! normal distribution: the Q-function, its logarithm, the inverse Mills ratio
//! and the per-sample information factor of a hard limiter,
//!
//! ```text
//! phi(s, alpha) = exp(-(alpha - s)^2) / (2 pi (Q(alpha - s) - Q(alpha - s)^2)).
//! ```
//!
//! The checked entry points (`q_function`, `log_q_function`, `phi_n`,
//! `phi_zero`) reject non-finite input. The unchecked `q`, `ln_q`, `mills` and
//! `info_factor` are meant for inner loops whose inputs were validated once.

use std::f64::consts::PI;

use libm::erfc;

use crate::error::{Error, Result};

/// ln(sqrt(2 pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Above this argument the upper tail is evaluated through the Mills-ratio
/// continued fraction instead of `erfc`.
pub const TAIL_SWITCH: f64 = 6.0;

const CF_MAX_TERMS: usize = 5000;

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::invalid(
                "probability",
                format!("{value} outside [0, 1]"),
            ))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_finite(x: f64, name: &'static str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

/// Upper tail probability of the standard normal distribution.
pub fn q_function(x: f64) -> Result<Probability> {
    check_finite(x, "x")?;
    Ok(Probability(q(x)))
}

/// `ln Q(x)`, accurate far into both tails.
pub fn log_q_function(x: f64) -> Result<f64> {
    check_finite(x, "x")?;
    Ok(ln_q(x))
}

/// Information attenuation of one hard-limited sample with noiseless signal
/// value `s` and threshold `alpha`.
pub fn phi_n(s: f64, alpha: f64) -> Result<f64> {
    check_finite(s, "s")?;
    check_finite(alpha, "alpha")?;
    Ok(info_factor(alpha - s))
}

/// Low-SNR limit of [`phi_n`]: the attenuation when the signal vanishes.
pub fn phi_zero(alpha: f64) -> Result<f64> {
    check_finite(alpha, "alpha")?;
    Ok(info_factor(alpha))
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Unchecked Q-function.
#[inline]
pub fn q(x: f64) -> f64 {
    0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Unchecked `ln Q(x)`.
#[inline]
pub fn ln_q(x: f64) -> f64 {
    if x < 0.0 {
        // Q(x) = 1 - Q(-x) with Q(-x) small: ln(1 - eps) without cancellation.
        (-q(-x)).ln_1p()
    } else if x < TAIL_SWITCH {
        q(x).ln()
    } else {
        -0.5 * x * x - LN_SQRT_2PI - mills_tail(x, 1.0).ln()
    }
}

/// Inverse Mills ratio `lambda(u) = pdf(u) / Q(u)` together with
/// `lambda(u) - u`, which is the curvature factor of `-ln Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mills {
    pub lambda: f64,
    pub lambda_minus_u: f64,
}

impl Mills {
    /// Second derivative of `-ln Q(u)`, `lambda (lambda - u)`; always positive.
    #[inline]
    pub fn curvature(&self) -> f64 {
        self.lambda * self.lambda_minus_u
    }
}

#[inline]
pub fn mills(u: f64) -> Mills {
    if u >= TAIL_SWITCH {
        Mills {
            lambda: mills_tail(u, 1.0),
            lambda_minus_u: 1.0 / mills_tail(u, 2.0),
        }
    } else {
        let lambda = (-0.5 * u * u - LN_SQRT_2PI - ln_q(u)).exp();
        Mills {
            lambda,
            lambda_minus_u: lambda - u,
        }
    }
}

/// Unchecked information factor as a function of `d = alpha - s`.
///
/// Computed in log space: the denominator `Q(d)(1 - Q(d))` underflows long
/// before the ratio does.
#[inline]
pub fn info_factor(d: f64) -> f64 {
    // even in d; fold so that phi(d) and phi(-d) are bit-identical
    let d = d.abs();
    (-d * d - ln_q(d) - ln_q(-d) - (2.0 * PI).ln()).exp()
}

/// Evaluates `x + k/(x + (k+1)/(x + (k+2)/(x + ...)))` by the modified Lentz
/// method. With `k = 1` this is the reciprocal Mills ratio `pdf(x)/Q(x)`.
/// Only used for `x >= TAIL_SWITCH`, where it converges in a few dozen terms.
fn mills_tail(x: f64, k: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for j in 0..CF_MAX_TERMS {
        let a = k + j as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn q_at_zero_is_half() {
        assert_eq!(q_function(0.0).unwrap().value(), 0.5);
    }

    #[test]
    fn q_at_one_matches_quadrature() {
        // Gaussian tail integrated to 40 digits.
        let v = q_function(1.0).unwrap().value();
        assert!((v - 0.158_655_253_931_457_05).abs() < 1e-15, "{v}");
    }

    #[test]
    fn non_finite_inputs_are_rejected() {
        assert_eq!(q_function(f64::NAN), Err(Error::NonFinite("x")));
        assert!(log_q_function(f64::INFINITY).is_err());
        assert!(phi_n(0.0, f64::NEG_INFINITY).is_err());
        assert!(phi_zero(f64::NAN).is_err());
    }

    #[test]
    fn reflection_identity() {
        let mut x = -8.0;
        while x <= 8.0 {
            let s = q(x) + q(-x);
            assert!((s - 1.0).abs() <= 1e-14, "x={x}: {s}");
            x += 0.01;
        }
    }

    #[test]
    fn derivative_is_negative_density() {
        // Below x = -4 the difference quotient of Q ~ 1 is dominated by rounding.
        let h = 1e-5;
        let mut x = -4.0;
        while x <= 6.0 {
            let numeric = (q(x + h) - q(x - h)) / (2.0 * h);
            let exact = -normal_pdf(x);
            assert!(close(numeric, exact, 1e-6), "x={x}: {numeric} vs {exact}");
            x += 0.25;
        }
    }

    #[test]
    fn log_q_tail_values() {
        // Extended-precision references.
        assert_eq!(log_q_function(0.0).unwrap(), 0.5f64.ln());
        assert!(close(ln_q(10.0), -53.231_285_150_512_47, 1e-10));
        assert!(close(ln_q(-10.0), -7.619_853_024_160_526e-24, 1e-10));
        assert!(close(ln_q(-10.0), -q(10.0), 1e-10));
        assert!(close(ln_q(20.0), -203.917_155_371_097_26, 1e-12));
        assert!(close(ln_q(30.0), -454.321_243_956_343_2, 1e-12));
        assert!(close(ln_q(37.0), -689.030_585_576_890_6, 1e-12));
        assert!(close(ln_q(6.0), -20.736_768_949_974_706, 1e-12));
        assert!(ln_q(-30.0) <= 0.0 && ln_q(-30.0).is_finite());
    }

    #[test]
    fn log_q_agrees_with_direct_log() {
        let mut x = -8.0;
        while x <= 30.0 {
            let direct = q(x).ln();
            assert!((ln_q(x) - direct).abs() <= 1e-12, "x={x}");
            x += 0.05;
        }
    }

    #[test]
    fn log_q_is_continuous_at_switch() {
        let below = ln_q(TAIL_SWITCH - 1e-12);
        let above = ln_q(TAIL_SWITCH);
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn phi_zero_at_origin_is_two_over_pi() {
        let v = phi_zero(0.0).unwrap();
        assert!((v - 2.0 / PI).abs() < 1e-12);
        assert!((phi_n(0.0, 0.0).unwrap() - 2.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn phi_high_precision_values() {
        assert!(close(
            phi_n(0.5, 0.3).unwrap(),
            0.627_423_711_914_665_9,
            1e-12
        ));
        assert!(close(
            phi_zero(1.0).unwrap(),
            0.438_628_861_102_213_96,
            1e-12
        ));
        assert!(close(
            phi_zero(10.0).unwrap(),
            7.770_077_433_040_133e-22,
            1e-10
        ));
        assert!(close(
            phi_zero(30.0).unwrap(),
            4.425_839_702_671_741e-195,
            1e-10
        ));
    }

    #[test]
    fn phi_is_even_and_positive() {
        for i in -24..=24 {
            for j in -24..=24 {
                let (s, a) = (i as f64 * 0.25, j as f64 * 0.25);
                let v = phi_n(s, a).unwrap();
                assert!(v > 0.0, "phi({s},{a}) = {v}");
                assert!(close(v, phi_n(-s, -a).unwrap(), 1e-13));
            }
            let t = i as f64 * 0.25;
            assert!(close(
                phi_n(t, 0.0).unwrap(),
                phi_n(-t, 0.0).unwrap(),
                1e-13
            ));
        }
    }

    #[test]
    fn phi_zero_decreases_in_magnitude() {
        let mut prev = phi_zero(0.0).unwrap();
        for i in 1..=400 {
            let a = i as f64 * 0.05;
            let v = phi_zero(a).unwrap();
            assert!(v < prev, "alpha={a}");
            assert_eq!(v, phi_zero(-a).unwrap());
            prev = v;
        }
    }

    #[test]
    fn mills_branches_agree() {
        for &u in &[5.9, 5.99, 6.0, 6.01, 8.0] {
            let direct = normal_pdf(u) / q(u);
            let m = mills(u);
            assert!(close(m.lambda, direct, 1e-12), "u={u}");
            assert!(close(m.lambda_minus_u, direct - u, 1e-9), "u={u}");
        }
        // far tail: lambda(u) - u ~ 1/u
        let m = mills(1e4);
        assert!(close(m.lambda_minus_u * 1e4, 1.0, 1e-6));
        assert!(m.curvature() > 0.0);
    }

    #[test]
    fn probability_range() {
        assert!(Probability::new(1.5).is_err());
        assert_eq!(Probability::new(0.25).unwrap().value(), 0.25);
    }
}

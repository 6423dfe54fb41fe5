//! The standard Logistic law `P(X <= x) = 1 / (1 + e^{-x})`.
//!
//! Everything here is stateless. `cdf` is written `H`, `tail` is `H̄`
//! in the doc comments of the operator modules.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form kernel of the standard Logistic distribution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LogisticKernel;

fn check_finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite { value: x })
    }
}

/// `1 / (1 + e^{-x})` without overflow for large `|x|`.
#[inline]
pub fn cdf_unchecked(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `e^{-x} / (1 + e^{-x})`, i.e. `cdf_unchecked(-x)`.
#[inline]
pub fn tail_unchecked(x: f64) -> f64 {
    cdf_unchecked(-x)
}

/// `ln(1 + e^{-x})`, the integral of the tail over `[x, ∞)`.
#[inline]
pub fn tail_integral_unchecked(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

impl LogisticKernel {
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_finite(x).map(cdf_unchecked)
    }

    pub fn tail(&self, x: f64) -> Result<f64> {
        check_finite(x).map(tail_unchecked)
    }

    /// `H'(x) = H(x) H̄(x)`.
    pub fn density(&self, x: f64) -> Result<f64> {
        check_finite(x).map(|x| cdf_unchecked(x) * tail_unchecked(x))
    }

    /// Inverse cdf. The endpoints 0 and 1 are refused rather than mapped to ±∞.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if p > 0.0 && p < 1.0 {
            Ok((p / (1.0 - p)).ln())
        } else {
            Err(Error::ProbabilityOutOfRange { value: p })
        }
    }

    /// `∫_x^∞ H̄(s) ds = ln(1 + e^{-x})`.
    pub fn tail_integral(&self, x: f64) -> Result<f64> {
        check_finite(x).map(tail_integral_unchecked)
    }

    /// Inverse-transform draw. Zero uniforms are redrawn so the result is finite.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                return self.from_uniform(u);
            }
        }
    }

    /// `quantile(u)` for a uniform already known to lie in `(0, 1)`.
    #[inline]
    pub fn from_uniform(&self, u: f64) -> f64 {
        (u / (1.0 - u)).ln()
    }
}

/// A numerical identity of the kernel with its worst residual over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }
}

fn max_over(xs: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    xs.iter().map(|&x| f(x)).fold(0.0, f64::max)
}

/// Composite Simpson rule for `∫_a^b g` with `2m` panels.
fn simpson(a: f64, b: f64, m: usize, g: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / (2 * m) as f64;
    let mut acc = g(a) + g(b);
    for i in 1..2 * m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Checks the kernel identities on `[-40, 40]` with step 0.01: density
/// against a central difference, exact symmetry, `H̄(x) = exp(-∫_{-x}^∞ H̄)`,
/// `∫_0^∞ H̄ = ln 2` by independent quadrature, and quantile round trips.
pub fn identity_checks() -> Vec<IdentityCheck> {
    let xs: Vec<f64> = (0..=8000).map(|k| -40.0 + k as f64 * 0.01).collect();
    let h = 1e-4;
    let fd = max_over(&xs, |x| {
        let d = (cdf_unchecked(x + h) - cdf_unchecked(x - h)) / (2.0 * h);
        (cdf_unchecked(x) * tail_unchecked(x) - d).abs()
    });
    let symmetry = max_over(&xs, |x| {
        let dens = |y: f64| cdf_unchecked(y) * tail_unchecked(y);
        (cdf_unchecked(-x) - tail_unchecked(x)).abs() + (dens(x) - dens(-x)).abs()
    });
    let complement = max_over(&xs, |x| (cdf_unchecked(x) + tail_unchecked(x) - 1.0).abs());
    let a1 = max_over(&xs, |x| {
        (tail_unchecked(x) - (-tail_integral_unchecked(-x)).exp()).abs()
    });
    let half_line = simpson(0.0, 40.0, 20_000, tail_unchecked) + tail_integral_unchecked(40.0);
    let ps: Vec<f64> = (1..1000).map(|k| k as f64 / 1000.0).collect();
    let round_trip = max_over(&ps, |p| (cdf_unchecked((p / (1.0 - p)).ln()) - p).abs());
    vec![
        IdentityCheck::new("density_vs_finite_difference", fd, 1e-7),
        IdentityCheck::new("symmetry", symmetry, 0.0),
        IdentityCheck::new("cdf_plus_tail", complement, 2.0 * f64::EPSILON),
        IdentityCheck::new("tail_integral_identity", a1, 1e-8),
        IdentityCheck::new(
            "half_line_integral_ln2",
            (half_line - std::f64::consts::LN_2).abs(),
            1e-10,
        ),
        IdentityCheck::new("quantile_round_trip", round_trip, 1e-12),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    const K: LogisticKernel = LogisticKernel;

    #[test]
    fn symmetry_point_and_asymptote() {
        assert_eq!(K.cdf(0.0).unwrap(), 0.5);
        assert_eq!(K.tail(0.0).unwrap(), 0.5);
        assert_eq!(K.density(0.0).unwrap(), 0.25);
        // 1 - 4.2e-18 is not representable, so the cdf rounds to 1 at x = 40;
        // the tail keeps the information
        let c = K.cdf(40.0).unwrap();
        let expected = 1.0 - (-40.0f64).exp() / (1.0 + (-40.0f64).exp());
        assert_eq!(c, expected);
        assert!(K.cdf(36.0).unwrap() < 1.0);
        let t = K.tail(40.0).unwrap();
        assert!(t > 4.0e-18 && t < 4.3e-18);
    }

    #[test]
    fn cdf_of_negative_is_tail() {
        assert_eq!(K.cdf(-2.0).unwrap(), K.tail(2.0).unwrap());
        assert!((K.tail(2.0).unwrap() - 0.119_202_922_022_117_6).abs() < 1e-15);
        for x in [-5.0, -1.0, 0.0, 1.0, 5.0] {
            let sum = K.cdf(x).unwrap() + K.tail(x).unwrap();
            assert!((sum - 1.0).abs() <= 2.0 * f64::EPSILON, "x = {x}");
        }
    }

    #[test]
    fn density_matches_finite_difference() {
        let h = 1e-4;
        for x in [-3.0, 0.0, 3.0] {
            let fd = (K.cdf(x + h).unwrap() - K.cdf(x - h).unwrap()) / (2.0 * h);
            assert!((K.density(x).unwrap() - fd).abs() < 1e-8);
            assert_eq!(K.density(x).unwrap(), K.density(-x).unwrap());
        }
    }

    #[test]
    fn quantile_round_trip_and_errors() {
        assert_eq!(K.quantile(0.5).unwrap(), 0.0);
        for p in [0.01, 0.25, 0.9] {
            let back = K.cdf(K.quantile(p).unwrap()).unwrap();
            assert!((back - p).abs() < 1e-12);
        }
        let p = 1.0 / (1.0 + std::f64::consts::E);
        assert!((K.quantile(p).unwrap() + 1.0).abs() < 1e-14);
        assert!(K.quantile(0.0).is_err());
        assert!(K.quantile(1.0).is_err());
        assert!(K.quantile(f64::NAN).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(K.cdf(f64::INFINITY).is_err());
        assert!(K.tail(f64::NAN).is_err());
        assert!(K.density(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn uniform_half_maps_to_zero() {
        assert_eq!(K.from_uniform(0.5), 0.0);
    }

    #[test]
    fn tail_integral_closed_form() {
        assert!((K.tail_integral(0.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        // large negative argument: ln(1 + e^{40}) ≈ 40
        assert!((K.tail_integral(-40.0).unwrap() - 40.0).abs() < 1e-15);
    }

    #[test]
    fn all_identity_checks_pass() {
        for c in identity_checks() {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn sampler_is_deterministic_under_seed() {
        let mut a = rand::rngs::StdRng::seed_from_u64(7);
        let mut b = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..10 {
            assert_eq!(K.sample(&mut a), K.sample(&mut b));
        }
    }
}

//! Small Monte Carlo statistics: sample moments, Kolmogorov–Smirnov
//! distances and one-sided z tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl MeanEstimate {
    /// Sample mean and `s / √n`; a single value gets an infinite error.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::INFINITY,
                count: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self {
                mean,
                std_error: f64::INFINITY,
                count: 1,
            };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            count: n,
        }
    }

    /// `|mean - target| ≤ k · std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// `sup_x |F_n(x) - F(x)|` for the empirical cdf of `samples`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    ks_statistic_sorted(&sorted, cdf)
}

pub fn ks_statistic_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = f - i as f64 / n;
            let hi = (i + 1) as f64 / n - f;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic survival function of the Kolmogorov distribution,
/// `P(√n D_n > t) ≈ 2 Σ_{k≥1} (-1)^{k-1} e^{-2 k² t²}`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    // the series converges slowly near 0, where the value is 1 to 1e-12
    if t < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value of a one-sample KS statistic `d` from `n` samples, with the
/// Stephens small-sample correction `(√n + 0.12 + 0.11/√n) d`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let rn = (n as f64).sqrt();
    kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d)
}

/// Critical value of `D_n` at level `alpha`, found by bisection on [`ks_p_value`].
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ks_p_value(mid, n) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Standard normal upper quantile `z` with `P(Z > z) = alpha`.
pub fn normal_upper_quantile(alpha: f64) -> f64 {
    standard_normal().inverse_cdf(1.0 - alpha)
}

/// `P(Z > z)` for a standard normal.
pub fn normal_sf(z: f64) -> f64 {
    standard_normal().sf(z)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// One-sided paired test of `E[a] > E[b]` from matched samples. Returns
/// the z score of the mean difference `a - b`.
pub fn paired_decrease_z(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let est = MeanEstimate::from_values(&diffs);
    if est.std_error == 0.0 {
        return if est.mean > 0.0 { f64::INFINITY } else { 0.0 };
    }
    est.mean / est.std_error
}

/// Empirical tail `x ↦ #{v > x} / n` of a sample, stored sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTail {
    sorted: Vec<f64>,
}

impl EmpiricalTail {
    pub fn new(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        Self { sorted: samples }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn tail(&self, x: f64) -> f64 {
        let above = self.sorted.len() - self.sorted.partition_point(|v| *v <= x);
        above as f64 / self.sorted.len() as f64
    }

    /// KS distance between this law and the one with the given cdf.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        ks_statistic_sorted(&self.sorted, cdf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_standard_error() {
        let e = MeanEstimate::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(MeanEstimate::from_values(&[1.0]).std_error.is_infinite());
    }

    #[test]
    fn ks_of_exact_quantiles_is_half_step() {
        let n = 100;
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_critical_values() {
        // asymptotic constants 1.358 (5%) and 1.628 (1%)
        let n = 1_000_000;
        let c05 = ks_critical_value(n, 0.05) * (n as f64).sqrt();
        let c01 = ks_critical_value(n, 0.01) * (n as f64).sqrt();
        assert!((c05 - 1.3581).abs() < 2e-3, "{c05}");
        assert!((c01 - 1.6276).abs() < 2e-3, "{c01}");
    }

    #[test]
    fn normal_quantiles() {
        assert!((normal_upper_quantile(0.01) - 2.3263).abs() < 1e-3);
        assert!((normal_upper_quantile(0.5)).abs() < 1e-6);
        assert!((normal_sf(1.959_964) - 0.025).abs() < 1e-6);
    }

    #[test]
    fn empirical_tail_counts() {
        let t = EmpiricalTail::new(vec![3.0, 1.0, 2.0]);
        assert_eq!(t.tail(0.0), 1.0);
        assert_eq!(t.tail(1.0), 2.0 / 3.0);
        assert_eq!(t.tail(3.0), 0.0);
        let single = EmpiricalTail::new(vec![0.7]);
        assert_eq!(single.tail(0.69), 1.0);
        assert_eq!(single.tail(0.7), 0.0);
    }

    #[test]
    fn paired_z_sign() {
        let a = [2.0, 3.0, 4.0, 5.0];
        let b = [1.0, 1.5, 3.5, 3.0];
        assert!(paired_decrease_z(&a, &b) > 0.0);
        assert!(paired_decrease_z(&b, &a) < 0.0);
    }
}

//! The recursion
//!
//! ```text
//! β_0(s) = 1 - s,    β_n(s) = ∫_s^1 (1/w) (1 - e^{-β_{n-1}(1-w)}) dw
//! ```
//!
//! on `[0, 1]`, together with the residual of the limit equation
//! `L = ∫_s^1 (1/w)(1 - e^{-L(1-w)}) dw` and the auxiliary function
//! `η(w) = (1-w) e^{L(1-w)} + w e^{-L(w)} - 1`.
//!
//! The iterates of the operator `T` started from `H̄²` are recovered from
//! this recursion as `f_n = H̄ · exp(-β_{n-1} ∘ H̄)`; [`tail_from_beta`]
//! builds that function so the two computations can be compared.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    fmt17, right_integrals_of, unit_integrand_samples, GridSpec, QuadratureRule, TailClosure,
    TailFunction, UnitIntervalCurve,
};
use crate::logistic::tail_unchecked;

/// Default resolution of `[0, 1]`.
pub const DEFAULT_RESOLUTION: usize = 10_000;

/// Integrand of the recursion at `w`, given `b = β(1 - w)`.
#[inline]
pub fn kernel(w: f64, b: f64) -> f64 {
    -(-b).exp_m1() / w
}

/// One step of the recursion.
pub fn next_beta(prev: &UnitIntervalCurve, rule: QuadratureRule) -> UnitIntervalCurve {
    let samples = unit_integrand_samples(prev, kernel);
    let m = prev.resolution();
    let mut values = right_integrals_of(&samples, 1.0 / m as f64, rule, 0.0);
    for v in &mut values {
        *v = v.clamp(0.0, 1.0);
    }
    UnitIntervalCurve::new(values).expect("clamped to [0, 1]")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSequence {
    pub curves: Vec<UnitIntervalCurve>,
    pub values_at_zero: Vec<f64>,
    /// Whether the successive-difference rule fired before `n_max`.
    pub stopped_early: bool,
    pub stop_tolerance: f64,
}

impl BetaSequence {
    pub fn last(&self) -> &UnitIntervalCurve {
        self.curves.last().expect("sequence holds β_0")
    }

    /// `β_{n+1} ≤ β_n + slack` at every node, for every consecutive pair.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.curves.windows(2).all(|w| {
            w[1].values()
                .iter()
                .zip(w[0].values())
                .all(|(a, b)| *a <= *b + slack)
        })
    }

    pub fn summary(&self) -> Vec<BetaSummaryRow> {
        self.curves
            .iter()
            .enumerate()
            .map(|(n, c)| BetaSummaryRow {
                n,
                beta_n_at_zero: c.values()[0],
                sup_value: c.sup(),
            })
            .collect()
    }

    /// Long-format CSV with columns `n,s,beta_n_of_s`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_csv_thinned(out, 1, 1)
    }

    /// Every `every`-th curve (the last one always), every `node_stride`-th node.
    pub fn write_csv_thinned<W: Write>(
        &self,
        mut out: W,
        every: usize,
        node_stride: usize,
    ) -> Result<()> {
        let (every, node_stride) = (every.max(1), node_stride.max(1));
        let last = self.curves.len() - 1;
        let mut buf = String::from("n,s,beta_n_of_s\n");
        for (n, c) in self.curves.iter().enumerate() {
            if n % every != 0 && n != last {
                continue;
            }
            for (k, v) in c.values().iter().enumerate().step_by(node_stride) {
                buf.push_str(&format!("{n},{},{}\n", fmt17(c.node(k)), fmt17(*v)));
            }
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSummaryRow {
    pub n: usize,
    pub beta_n_at_zero: f64,
    pub sup_value: f64,
}

/// `β_0, …, β_N` where `N ≤ n_max`; stops once `sup |β_n - β_{n+1}| < stop_tolerance`.
pub fn run_recursion(
    n_max: usize,
    stop_tolerance: f64,
    resolution: usize,
    rule: QuadratureRule,
) -> Result<BetaSequence> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    let mut curves = vec![UnitIntervalCurve::identity_complement(resolution)];
    let mut stopped_early = false;
    for _ in 0..n_max {
        let next = next_beta(curves.last().unwrap(), rule);
        let diff = next.sup_distance(curves.last().unwrap());
        curves.push(next);
        if diff < stop_tolerance {
            stopped_early = true;
            break;
        }
    }
    let values_at_zero = curves.iter().map(|c| c.values()[0]).collect();
    Ok(BetaSequence {
        curves,
        values_at_zero,
        stopped_early,
        stop_tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitDiagnostic {
    pub candidate: UnitIntervalCurve,
    /// `sup_s |L(s) - ∫_s^1 (1/w)(1 - e^{-L(1-w)}) dw|`.
    pub integral_residual: f64,
    /// `sup_w |η(w)|`.
    pub eta_max_abs: f64,
}

/// `η(w_k)` at every node `w_k = k/m`.
pub fn eta_values(candidate: &UnitIntervalCurve) -> Vec<f64> {
    let v = candidate.values();
    let m = candidate.resolution();
    (0..=m)
        .map(|k| {
            let w = k as f64 / m as f64;
            (1.0 - w) * v[m - k].exp() + w * (-v[k]).exp() - 1.0
        })
        .collect()
}

/// Residuals of a candidate limit `L` with `L(1) = 0`.
pub fn check_l_equation(
    candidate: &UnitIntervalCurve,
    rule: QuadratureRule,
) -> Result<LimitDiagnostic> {
    let at_one = *candidate.values().last().unwrap();
    if at_one != 0.0 {
        return Err(Error::CandidateBoundary { value: at_one });
    }
    let image = next_beta(candidate, rule);
    let integral_residual = candidate.sup_distance(&image);
    let eta_max_abs = eta_values(candidate)
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max);
    Ok(LimitDiagnostic {
        candidate: candidate.clone(),
        integral_residual,
        eta_max_abs,
    })
}

/// `x ↦ H̄(x) exp(-β(H̄(x)))` on `grid`, which is `f_{n+1}` when `β = β_n`.
pub fn tail_from_beta(beta: &UnitIntervalCurve, grid: GridSpec) -> Result<TailFunction> {
    let values = (0..grid.len)
        .into_par_iter()
        .map(|k| {
            let h = tail_unchecked(grid.x(k));
            h * (-beta.evaluate(h)).exp()
        })
        .collect();
    TailFunction::new(grid, values, TailClosure::OneLeftLogisticSqueezeRight)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RULE: QuadratureRule = QuadratureRule::Simpson;

    fn series_beta1_at_zero() -> f64 {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for k in 1..30 {
            fact *= k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign / (k as f64 * fact);
        }
        sum
    }

    #[test]
    fn first_step_from_identity_complement() {
        let b0 = UnitIntervalCurve::identity_complement(DEFAULT_RESOLUTION);
        let b1 = next_beta(&b0, RULE);
        assert!((b1.values()[0] - series_beta1_at_zero()).abs() < 1e-9);
        assert!((b1.values()[0] - 0.796_600).abs() < 1e-4);
        assert_eq!(*b1.values().last().unwrap(), 0.0);
        for k in 1..DEFAULT_RESOLUTION {
            assert!(b1.values()[k] < b0.values()[k], "s = {}", b0.node(k));
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let z = UnitIntervalCurve::zero(100);
        assert_eq!(next_beta(&z, RULE), z);
        let d = check_l_equation(&z, RULE).unwrap();
        assert_eq!(d.integral_residual, 0.0);
        assert_eq!(d.eta_max_abs, 0.0);
    }

    #[test]
    fn identity_complement_residual() {
        let b0 = UnitIntervalCurve::identity_complement(DEFAULT_RESOLUTION);
        let d = check_l_equation(&b0, RULE).unwrap();
        assert!((d.integral_residual - (1.0 - series_beta1_at_zero())).abs() < 1e-8);
        assert!((d.integral_residual - 0.2034).abs() < 1e-4);
    }

    #[test]
    fn candidate_must_vanish_at_one() {
        let c = UnitIntervalCurve::from_fn(10, |_| 0.1).unwrap();
        assert!(matches!(
            check_l_equation(&c, RULE),
            Err(Error::CandidateBoundary { .. })
        ));
    }

    #[test]
    fn eta_vanishes_at_endpoints() {
        let c = UnitIntervalCurve::from_fn(64, |s| 0.4 * (1.0 - s) * (1.0 - s)).unwrap();
        let eta = eta_values(&c);
        assert_eq!(eta[0], 0.0);
        assert_eq!(*eta.last().unwrap(), 0.0);
    }

    #[test]
    fn single_step_recursion() {
        let seq = run_recursion(1, 1e-12, 200, RULE).unwrap();
        assert_eq!(seq.curves.len(), 2);
        assert!(!seq.stopped_early);
        assert!(run_recursion(0, 1e-3, 200, RULE).is_err());
    }

    #[test]
    fn kernel_bounds_hold_at_interior_nodes() {
        let seq = run_recursion(6, 1e-12, 1000, RULE).unwrap();
        for c in &seq.curves {
            let m = c.resolution();
            for j in 1..m {
                let w = j as f64 / m as f64;
                let b = c.values()[m - j];
                let k = kernel(w, b);
                assert!(k >= 0.0 && k <= b / w + 1e-15 && b / w <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn csv_and_summary_layout() {
        let seq = run_recursion(2, 1e-12, 4, RULE).unwrap();
        let mut buf = Vec::new();
        seq.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 5);
        assert!(text.starts_with("n,s,beta_n_of_s\n0,0.0000000000000000e0,1.0000000000000000e0\n"));
        let summary = seq.summary();
        assert_eq!(summary[0].beta_n_at_zero, 1.0);
        assert_eq!(summary.len(), 3);
    }
}

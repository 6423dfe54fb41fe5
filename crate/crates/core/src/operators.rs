//! The diagonal operator `T`, the Logistic RDE operator `𝔄`, the bivariate
//! tail plug-in and the fixed-point driver.
//!
//! With `H̄` the Logistic tail, for a tail `f`
//!
//! ```text
//! T(f)(x) = H̄(x) exp(-∫_{-x}^∞ (H̄(s) - f(s)) ds)
//! 𝔄(f)(x) = exp(-∫_{-x}^∞ f(s) ds)
//! ```
//!
//! `T` is always evaluated in this difference form: the integrand `H̄ - f`
//! is small and integrable, so no large exponent is ever formed.
//!
//! All operators need `-x_k` to be a node for every node `x_k`, so they
//! only accept symmetric grids.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fmt17, right_integrals_of, GridSpec, QuadratureRule, TailClosure, TailFunction};
use crate::logistic::{tail_integral_unchecked, tail_unchecked};

fn require_symmetric(grid: &GridSpec) -> Result<()> {
    if grid.is_symmetric() {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!(
            "operators need a grid symmetric about 0, got [{}, {}]",
            grid.x_min, grid.x_max
        )))
    }
}

/// `∫_{x_k}^∞ (H̄ - f)` at every node, with the closure mass of the
/// difference added past `x_max`.
fn deficit_right_integrals(f: &TailFunction, rule: QuadratureRule) -> Result<Vec<f64>> {
    let grid = f.grid();
    let diff: Vec<f64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| tail_unchecked(grid.x(k)) - v)
        .collect();
    let closure_mass = tail_integral_unchecked(grid.x_max) - f.right_closure_mass()?;
    Ok(right_integrals_of(&diff, grid.step(), rule, closure_mass))
}

/// `T(f)` on `f`'s grid for any tail `f` of a law in `𝒜`; the values may
/// exceed 1 when `f` is not dominated by `H̄`.
pub fn apply_t_extended(f: &TailFunction, rule: QuadratureRule) -> Result<Vec<f64>> {
    require_symmetric(f.grid())?;
    let deficit = deficit_right_integrals(f, rule)?;
    let grid = f.grid();
    let n = grid.len;
    Ok((0..n)
        .map(|k| tail_unchecked(grid.x(k)) * (-deficit[n - 1 - k]).exp())
        .collect())
}

/// `T(f)` for `f` between the envelopes `H̄²` and `H̄`.
pub fn apply_t(f: &TailFunction, rule: QuadratureRule) -> Result<TailFunction> {
    f.check_envelope()?;
    let mut values = apply_t_extended(f, rule)?;
    // T maps the envelope into itself; rounding and quadrature error can
    // still push the far ends a hair outside it
    for (k, v) in values.iter_mut().enumerate() {
        let h = tail_unchecked(f.grid().x(k));
        *v = v.clamp(h * h, h);
    }
    TailFunction::new(*f.grid(), values, TailClosure::OneLeftLogisticSqueezeRight)
}

/// Tail of `𝔄(μ)` where `f` is the tail of `μ`.
pub fn apply_a(f: &TailFunction, rule: QuadratureRule) -> Result<TailFunction> {
    require_symmetric(f.grid())?;
    let right = f.right_integrals(rule)?;
    let n = f.grid().len;
    let values = (0..n).map(|k| (-right[n - 1 - k]).exp().min(1.0)).collect();
    TailFunction::new(*f.grid(), values, TailClosure::OneLeftLogisticSqueezeRight)
}

/// `sup_x |T(f)(x)/H̄(x) · 𝔄(f)(x)/H̄(x) - 1|` over the nodes.
pub fn identity_residual(f: &TailFunction, rule: QuadratureRule) -> Result<f64> {
    let t = apply_t_extended(f, rule)?;
    let a = apply_a(f, rule)?;
    let grid = f.grid();
    Ok(t.iter()
        .zip(a.values())
        .enumerate()
        .map(|(k, (tv, av))| {
            let h = tail_unchecked(grid.x(k));
            ((tv / h) * (av / h) - 1.0).abs()
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorIterate {
    pub index: usize,
    pub function: TailFunction,
    pub sup_distance_to_logistic_tail: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub iterates: Vec<OperatorIterate>,
    /// First `n` with `sup |f_{n+1} - f_n| < tolerance`.
    pub converged_at: Option<usize>,
    pub tolerance: f64,
}

impl Trajectory {
    pub fn last(&self) -> &OperatorIterate {
        self.iterates.last().expect("trajectory holds the seed")
    }

    pub fn summary(&self) -> TrajectorySummary {
        TrajectorySummary {
            converged_at: self.converged_at,
            tolerance: self.tolerance,
            iterates: self
                .iterates
                .iter()
                .map(|it| IterateSummary {
                    n: it.index,
                    sup_distance: it.sup_distance_to_logistic_tail,
                })
                .collect(),
        }
    }

    /// Long-format CSV with columns `n,x,f_n(x)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_csv_thinned(out, 1, 1)
    }

    /// Like [`Trajectory::write_csv`] but keeping every `every`-th iterate
    /// (the last one always) and every `node_stride`-th grid node.
    pub fn write_csv_thinned<W: Write>(
        &self,
        mut out: W,
        every: usize,
        node_stride: usize,
    ) -> Result<()> {
        let (every, node_stride) = (every.max(1), node_stride.max(1));
        let last = self.iterates.len() - 1;
        let mut buf = String::from("n,x,f_n(x)\n");
        for (i, it) in self.iterates.iter().enumerate() {
            if i % every != 0 && i != last {
                continue;
            }
            let grid = it.function.grid();
            for (k, v) in it.function.values().iter().enumerate().step_by(node_stride) {
                buf.push_str(&format!(
                    "{},{},{}\n",
                    it.index,
                    fmt17(grid.x(k)),
                    fmt17(*v)
                ));
            }
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateSummary {
    pub n: usize,
    pub sup_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub converged_at: Option<usize>,
    pub tolerance: f64,
    pub iterates: Vec<IterateSummary>,
}

/// `f_0 = seed`, `f_n = T(f_{n-1})`, until two consecutive iterates are
/// within `tolerance` in sup norm or `max_iters` applications were made.
pub fn iterate_to_fixed_point(
    seed: TailFunction,
    max_iters: usize,
    tolerance: f64,
    rule: QuadratureRule,
) -> Result<Trajectory> {
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be positive".into()));
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    seed.check_envelope()?;
    let d0 = seed.sup_distance_to_logistic_tail();
    let mut iterates = vec![OperatorIterate {
        index: 0,
        function: seed,
        sup_distance_to_logistic_tail: d0,
    }];
    let mut converged_at = None;
    for n in 1..=max_iters {
        let prev = &iterates[n - 1].function;
        let next = apply_t(prev, rule)?;
        let step = next.sup_distance(prev);
        let dist = next.sup_distance_to_logistic_tail();
        iterates.push(OperatorIterate {
            index: n,
            function: next,
            sup_distance_to_logistic_tail: dist,
        });
        if step < tolerance {
            converged_at = Some(n - 1);
            break;
        }
    }
    Ok(Trajectory {
        iterates,
        converged_at,
        tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateTailQuery {
    pub x: f64,
    pub y: f64,
}

impl BivariateTailQuery {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        for v in [x, y] {
            if !v.is_finite() {
                return Err(Error::NonFinite { value: v });
            }
        }
        Ok(Self { x, y })
    }
}

/// Plug-in estimate of the joint tail `P(X > x, Y > y)` after one step of
/// the bivariate operator:
/// `H̄(x) H̄(y) exp(-mean[(X + x)^+ ∧ (Y + y)^+])`.
pub fn bivariate_gamma_tail(samples: &[(f64, f64)], q: BivariateTailQuery) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mean = samples
        .iter()
        .map(|&(a, b)| (a + q.x).max(0.0).min((b + q.y).max(0.0)))
        .sum::<f64>()
        / samples.len() as f64;
    Ok(tail_unchecked(q.x) * tail_unchecked(q.y) * (-mean).exp())
}

/// Pointwise convex combination `λ(x) H̄² + (1 - λ(x)) H̄`, which lies in the
/// envelope for any `λ` with values in `[0, 1]`. Monotonicity needs `λ`
/// smooth enough; a slowly varying `λ` keeps it.
pub fn envelope_mixture(grid: GridSpec, lambda: impl Fn(f64) -> f64) -> Result<TailFunction> {
    require_symmetric(&grid)?;
    let values: Vec<f64> = grid
        .xs()
        .map(|x| {
            let h = tail_unchecked(x);
            let l = lambda(x).clamp(0.0, 1.0);
            l * h * h + (1.0 - l) * h
        })
        .collect();
    TailFunction::new(grid, values, TailClosure::OneLeftLogisticSqueezeRight)
}

/// Random member of the envelope set: `λ(x) H̄² + (1 - λ(x)) H̄` with
/// `λ(x) = c + a sin(ω x + φ)` kept inside `[0, 0.95]` and `|λ'| ≤ 0.05`,
/// which is enough for the result to be non-increasing.
pub fn random_envelope_member<R: Rng + ?Sized>(
    grid: GridSpec,
    rng: &mut R,
) -> Result<TailFunction> {
    let center: f64 = rng.random_range(0.05..0.9);
    let room = center.min(0.95 - center);
    let amp: f64 = rng.random_range(0.0..=room);
    let omega = if amp > 0.0 {
        rng.random_range(0.0..=(0.05 / amp).min(3.0))
    } else {
        0.0
    };
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    envelope_mixture(grid, |x| center + amp * (omega * x + phase).sin())
}

/// Random tail of a law with `E[X^+] < ∞`: a mixture of one to three
/// Logistic components with location in `[-3, 3]` and scale in `[0.5, 2]`.
pub fn random_admissible_tail<R: Rng + ?Sized>(
    grid: GridSpec,
    rng: &mut R,
) -> Result<TailFunction> {
    let k = rng.random_range(1..=3);
    let comps: Vec<(f64, f64, f64)> = (0..k)
        .map(|_| {
            (
                rng.random_range(0.1..1.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(0.5..2.0),
            )
        })
        .collect();
    let total: f64 = comps.iter().map(|c| c.0).sum();
    TailFunction::from_fn(grid, TailClosure::OneLeftLogisticSqueezeRight, |x| {
        comps
            .iter()
            .map(|&(w, loc, scale)| w / total * tail_unchecked((x - loc) / scale))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    })
}

//! Grid-sampled monotone functions on the real line and on `[0, 1]`.
//!
//! A [`TailFunction`] stores a non-increasing function `ℝ → [0, 1]` on a
//! uniform grid and extends it past the grid with a [`TailClosure`]. A
//! [`UnitIntervalCurve`] stores a function on `s = k/m`, `k = 0..=m`.
//! Both come with cumulative quadrature from the right, which is the only
//! kind of integral the operators need.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logistic::{tail_integral_unchecked, tail_unchecked};

/// Slack allowed when checking monotonicity and envelope membership.
pub const GRID_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureRule {
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
    pub abs_tolerance: f64,
}

impl QuadratureSpec {
    pub fn new(rule: QuadratureRule, abs_tolerance: f64) -> Result<Self> {
        if abs_tolerance > 0.0 && abs_tolerance.is_finite() {
            Ok(Self {
                rule,
                abs_tolerance,
            })
        } else {
            Err(Error::InvalidArgument(format!(
                "quadrature tolerance must be positive, got {abs_tolerance}"
            )))
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: QuadratureRule::Simpson,
            abs_tolerance: 1e-6,
        }
    }
}

/// How a [`TailFunction`] is continued outside its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailClosure {
    /// Left of the grid the first stored value is kept. Right of the grid
    /// the ratio `value(x_max) / H̄(x_max)` is held fixed, so the
    /// continuation stays between `H̄²` and `H̄` whenever the last node does.
    OneLeftLogisticSqueezeRight,
    /// Both sides clamp to the boundary values. Only integrable on the
    /// right when the last stored value is zero.
    Constant,
}

/// Uniform grid `x_k = x_min + k (x_max - x_min) / (len - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub len: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, len: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if len < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes, got {len}"
            )));
        }
        Ok(Self { x_min, x_max, len })
    }

    /// Grid on `[x_min, x_max]` whose spacing is `step` (rounded to fit).
    pub fn with_step(x_min: f64, x_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        let cells = ((x_max - x_min) / step).round();
        if !cells.is_finite() || !(2.0..=1e8).contains(&cells) {
            return Err(Error::InvalidGrid(format!(
                "[{x_min}, {x_max}] with step {step} gives {cells} cells"
            )));
        }
        Self::new(x_min, x_max, cells as usize + 1)
    }

    /// `[-x_max, x_max]` with the given step; symmetric grids put `-x_k` on a node.
    pub fn symmetric(x_max: f64, step: f64) -> Result<Self> {
        Self::with_step(-x_max, x_max, step)
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.len - 1) as f64
    }

    #[inline]
    pub fn x(&self, k: usize) -> f64 {
        if k + 1 == self.len {
            self.x_max
        } else {
            self.x_min + k as f64 * self.step()
        }
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |k| self.x(k))
    }

    /// Whether `x ↦ -x` maps nodes onto nodes.
    pub fn is_symmetric(&self) -> bool {
        self.x_min == -self.x_max
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: -40.0,
            x_max: 40.0,
            len: 8001,
        }
    }
}

/// Per-cell integrals `∫_{x_k}^{x_{k+1}}` of the samples.
///
/// The Simpson variant integrates the quadratic through three consecutive
/// nodes over one cell, which keeps fourth-order local accuracy while
/// allowing cumulative sums that start at any node.
fn cell_integrals(values: &[f64], step: f64, rule: QuadratureRule) -> Vec<f64> {
    let n = values.len();
    let mut cells = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let c = match rule {
            QuadratureRule::Trapezoid => 0.5 * step * (values[k] + values[k + 1]),
            QuadratureRule::Simpson => {
                if k + 2 < n {
                    step / 12.0 * (5.0 * values[k] + 8.0 * values[k + 1] - values[k + 2])
                } else {
                    step / 12.0 * (-values[k - 1] + 8.0 * values[k] + 5.0 * values[k + 1])
                }
            }
        };
        cells.push(c);
    }
    cells
}

/// `∫_{x_k}^{x_max}` of the samples for every node, plus `tail_mass`.
pub(crate) fn right_integrals_of(
    values: &[f64],
    step: f64,
    rule: QuadratureRule,
    tail_mass: f64,
) -> Vec<f64> {
    cumulative_from_right(&cell_integrals(values, step, rule), tail_mass)
}

/// `out[k] = Σ_{j ≥ k} cells[j] + tail_mass`, with `out.len() == cells.len() + 1`.
fn cumulative_from_right(cells: &[f64], tail_mass: f64) -> Vec<f64> {
    let mut out = vec![0.0; cells.len() + 1];
    let mut acc = tail_mass;
    out[cells.len()] = acc;
    for k in (0..cells.len()).rev() {
        acc += cells[k];
        out[k] = acc;
    }
    out
}

/// Non-increasing function `ℝ → [0, 1]` sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFunction {
    grid: GridSpec,
    values: Vec<f64>,
    closure: TailClosure,
}

impl TailFunction {
    pub fn new(grid: GridSpec, values: Vec<f64>, closure: TailClosure) -> Result<Self> {
        if values.len() != grid.len {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len,
                values.len()
            )));
        }
        for (k, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidGrid(format!(
                    "value {v} at x = {} outside [0, 1]",
                    grid.x(k)
                )));
            }
        }
        for k in 1..values.len() {
            if values[k] > values[k - 1] + GRID_SLACK {
                return Err(Error::InvalidGrid(format!(
                    "values increase at x = {}: {} -> {}",
                    grid.x(k),
                    values[k - 1],
                    values[k]
                )));
            }
        }
        Ok(Self {
            grid,
            values,
            closure,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: GridSpec, closure: TailClosure, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.xs().map(f).collect();
        Self::new(grid, values, closure)
    }

    /// The Logistic tail `H̄` on `grid`.
    pub fn logistic_tail(grid: GridSpec) -> Self {
        Self::from_fn(
            grid,
            TailClosure::OneLeftLogisticSqueezeRight,
            tail_unchecked,
        )
        .expect("H̄ is a valid tail")
    }

    /// The lower envelope `H̄²` on `grid`.
    pub fn logistic_tail_squared(grid: GridSpec) -> Self {
        Self::from_fn(grid, TailClosure::OneLeftLogisticSqueezeRight, |x| {
            tail_unchecked(x).powi(2)
        })
        .expect("H̄² is a valid tail")
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn closure(&self) -> TailClosure {
        self.closure
    }

    pub fn x_min(&self) -> f64 {
        self.grid.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.grid.x_max
    }

    pub fn step(&self) -> f64 {
        self.grid.step()
    }

    fn right_ratio(&self) -> f64 {
        let last = *self.values.last().expect("non-empty grid");
        last / tail_unchecked(self.grid.x_max)
    }

    /// Linear interpolation on the grid, closure outside it.
    pub fn evaluate(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= g.x_min {
            return self.values[0];
        }
        if x >= g.x_max {
            return match self.closure {
                TailClosure::OneLeftLogisticSqueezeRight => {
                    if x == g.x_max {
                        self.values[g.len - 1]
                    } else {
                        (self.right_ratio() * tail_unchecked(x)).min(1.0)
                    }
                }
                TailClosure::Constant => self.values[g.len - 1],
            };
        }
        let pos = (x - g.x_min) / g.step();
        let k = (pos.floor() as usize).min(g.len - 2);
        let t = pos - k as f64;
        let (a, b) = (self.values[k], self.values[k + 1]);
        a + t * (b - a)
    }

    /// Mass of the right closure, `∫_{x_max}^∞`.
    pub fn right_closure_mass(&self) -> Result<f64> {
        match self.closure {
            TailClosure::OneLeftLogisticSqueezeRight => {
                Ok(self.right_ratio() * tail_integral_unchecked(self.grid.x_max))
            }
            TailClosure::Constant => {
                let last = self.values[self.grid.len - 1];
                if last == 0.0 {
                    Ok(0.0)
                } else {
                    Err(Error::NonIntegrable(format!(
                        "constant closure with value {last} beyond x_max = {}",
                        self.grid.x_max
                    )))
                }
            }
        }
    }

    /// `∫_{x_k}^∞ f` for every node `x_k`.
    pub fn right_integrals(&self, rule: QuadratureRule) -> Result<Vec<f64>> {
        let cells = cell_integrals(&self.values, self.grid.step(), rule);
        Ok(cumulative_from_right(&cells, self.right_closure_mass()?))
    }

    /// `∫_a^∞ f` for an arbitrary `a`: grid quadrature plus closed-form closure mass.
    pub fn integrate_right(&self, a: f64, quad: &QuadratureSpec) -> Result<f64> {
        if !a.is_finite() {
            return Err(Error::NonFinite { value: a });
        }
        let right = self.right_integrals(quad.rule)?;
        Ok(self.integral_from_nodes(&right, a))
    }

    /// `∫_a^∞` given the node-wise right integrals. Partial cells use the
    /// exact integral of the linear interpolant.
    pub(crate) fn integral_from_nodes(&self, right: &[f64], a: f64) -> f64 {
        let grid = &self.grid;
        let values = &self.values;
        if a <= grid.x_min {
            return right[0] + values[0] * (grid.x_min - a);
        }
        if a >= grid.x_max {
            return match self.closure {
                TailClosure::OneLeftLogisticSqueezeRight => {
                    self.right_ratio() * tail_integral_unchecked(a)
                }
                TailClosure::Constant => 0.0,
            };
        }
        let step = grid.step();
        let pos = (a - grid.x_min) / step;
        let k = (pos.floor() as usize).min(grid.len - 2);
        let t = pos - k as f64;
        if t == 0.0 {
            return right[k];
        }
        // drop ∫_{x_k}^{a} of the interpolant
        let fa = values[k] + t * (values[k + 1] - values[k]);
        right[k] - 0.5 * t * step * (values[k] + fa)
    }

    /// Richardson-style error estimate for `∫_a^∞ f` when `a` is a node:
    /// the change when the same rule runs on every other node.
    pub fn quadrature_error_estimate(&self, a: f64, quad: &QuadratureSpec) -> Result<f64> {
        let fine = self.integrate_right(a, quad)?;
        let coarse = self.coarsened()?.integrate_right(a, quad)?;
        Ok((fine - coarse).abs())
    }

    /// Every other node, keeping both endpoints when `len` is odd.
    pub fn coarsened(&self) -> Result<Self> {
        if self.grid.len.is_multiple_of(2) {
            return Err(Error::InvalidGrid(
                "coarsening needs an odd node count".into(),
            ));
        }
        let grid = GridSpec::new(self.grid.x_min, self.grid.x_max, self.grid.len / 2 + 1)?;
        let values = self.values.iter().step_by(2).copied().collect();
        Self::new(grid, values, self.closure)
    }

    /// Envelope check `H̄²(x) ≤ f(x) ≤ H̄(x)` at every node.
    pub fn check_envelope(&self) -> Result<()> {
        for (k, &v) in self.values.iter().enumerate() {
            let x = self.grid.x(k);
            let upper = tail_unchecked(x);
            let lower = upper * upper;
            if v < lower - GRID_SLACK || v > upper + GRID_SLACK {
                return Err(Error::EnvelopeViolation {
                    x,
                    value: v,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + GRID_SLACK)
    }

    /// Pointwise `self ≤ other + slack` on a shared grid.
    pub fn dominated_by(&self, other: &Self, slack: f64) -> bool {
        self.grid == other.grid
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| *a <= *b + slack)
    }

    /// Largest absolute difference over nodes of a shared grid.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        sup_abs_diff(&self.values, &other.values)
    }

    /// Largest absolute deviation from `H̄` over the nodes.
    pub fn sup_distance_to_logistic_tail(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| (v - tail_unchecked(self.grid.x(k))).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_xy_csv(out, "x", self.grid.xs().zip(self.values.iter().copied()))
    }

    pub fn read_csv<R: BufRead>(input: R, closure: TailClosure) -> Result<Self> {
        let (xs, values) = read_xy_csv(input, "x")?;
        if xs.len() < 3 {
            return Err(Error::Csv {
                line: xs.len() + 1,
                reason: "need at least 3 rows".into(),
            });
        }
        let grid = GridSpec::new(xs[0], xs[xs.len() - 1], xs.len())?;
        check_nodes(&xs, |k| grid.x(k))?;
        Self::new(grid, values, closure)
    }
}

pub(crate) fn sup_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Function on `[0, 1]` sampled at `s = k/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitIntervalCurve {
    values: Vec<f64>,
}

impl UnitIntervalCurve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "need resolution >= 2, got {} values",
                values.len()
            )));
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidGrid(format!(
                "value {v} at s = {} outside [0, 1]",
                k as f64 / (values.len() - 1) as f64
            )));
        }
        Ok(Self { values })
    }

    pub fn from_fn(resolution: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let m = resolution as f64;
        Self::new((0..=resolution).map(|k| f(k as f64 / m)).collect())
    }

    pub fn zero(resolution: usize) -> Self {
        Self {
            values: vec![0.0; resolution + 1],
        }
    }

    /// `s ↦ 1 - s`.
    pub fn identity_complement(resolution: usize) -> Self {
        let m = resolution as f64;
        Self {
            values: (0..=resolution)
                .map(|k| {
                    if k == resolution {
                        0.0
                    } else {
                        1.0 - k as f64 / m
                    }
                })
                .collect(),
        }
    }

    pub fn resolution(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        k as f64 / self.resolution() as f64
    }

    /// Linear interpolation; `s` is clamped to `[0, 1]`.
    pub fn evaluate(&self, s: f64) -> f64 {
        let m = self.resolution();
        let pos = s.clamp(0.0, 1.0) * m as f64;
        let k = (pos.floor() as usize).min(m - 1);
        let t = pos - k as f64;
        let (a, b) = (self.values[k], self.values[k + 1]);
        a + t * (b - a)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        sup_abs_diff(&self.values, &other.values)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let m = self.resolution();
        write_xy_csv(out, "s", (0..=m).map(|k| (self.node(k), self.values[k])))
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let (ss, values) = read_xy_csv(input, "s")?;
        let m = ss.len().saturating_sub(1).max(1);
        check_nodes(&ss, |k| k as f64 / m as f64)?;
        Self::new(values)
    }
}

/// Cumulative integrals `∫_{s_k}^1 g(w) dw` for `g` sampled at the nodes
/// `w_j = j/m` of a curve with resolution `m`.
pub(crate) fn unit_right_integrals(samples: &[f64], rule: QuadratureRule) -> Vec<f64> {
    let m = samples.len() - 1;
    let cells = cell_integrals(samples, 1.0 / m as f64, rule);
    cumulative_from_right(&cells, 0.0)
}

/// `∫_s^1 transform(w, c(1 - w)) dw`.
///
/// `transform` is sampled at the nodes `w = k/m`, where `c(1 - w)` is a
/// stored value. At `w = 0` the integrand is replaced by the linear
/// extrapolation `2 I(h) - I(2h)` from the first two interior nodes, which
/// is how integrands like `(1/w)(1 - e^{-c(1-w)})` with `c(1) = 0` get their
/// finite limit.
pub fn integrate_unit(
    c: &UnitIntervalCurve,
    s: f64,
    rule: QuadratureRule,
    transform: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("s = {s} outside [0, 1]")));
    }
    let samples = unit_integrand_samples(c, transform);
    let right = unit_right_integrals(&samples, rule);
    let m = c.resolution();
    let pos = s * m as f64;
    let k = pos.floor() as usize;
    let t = pos - k as f64;
    if k >= m || t == 0.0 {
        return Ok(right[k.min(m)]);
    }
    let fs = samples[k] + t * (samples[k + 1] - samples[k]);
    Ok(right[k] - 0.5 * t / m as f64 * (samples[k] + fs))
}

pub(crate) fn unit_integrand_samples(
    c: &UnitIntervalCurve,
    transform: impl Fn(f64, f64) -> f64,
) -> Vec<f64> {
    let m = c.resolution();
    let v = c.values();
    let mut samples: Vec<f64> = (0..=m)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                transform(j as f64 / m as f64, v[m - j])
            }
        })
        .collect();
    samples[0] = 2.0 * samples[1] - samples[2];
    samples
}

fn write_xy_csv<W: Write>(
    mut out: W,
    x_name: &str,
    rows: impl Iterator<Item = (f64, f64)>,
) -> Result<()> {
    let mut buf = String::new();
    writeln!(buf, "{x_name},value").expect("write to String");
    for (x, v) in rows {
        writeln!(buf, "{},{}", fmt17(x), fmt17(v)).expect("write to String");
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

fn read_xy_csv<R: BufRead>(input: R, x_name: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if i == 0 {
            if line.trim() != format!("{x_name},value") {
                return Err(Error::Csv {
                    line: lineno,
                    reason: format!("expected header `{x_name},value`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |p: Option<&str>| -> Result<f64> {
            p.and_then(|t| t.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Csv {
                    line: lineno,
                    reason: format!("cannot parse `{line}`"),
                })
        };
        xs.push(parse(parts.next())?);
        vs.push(parse(parts.next())?);
    }
    Ok((xs, vs))
}

fn check_nodes(xs: &[f64], node: impl Fn(usize) -> f64) -> Result<()> {
    for (k, &x) in xs.iter().enumerate() {
        let expect = node(k);
        if (x - expect).abs() > 1e-9 * (1.0 + expect.abs()) {
            return Err(Error::Csv {
                line: k + 2,
                reason: format!("abscissa {x} is not on a uniform grid (expected {expect})"),
            });
        }
    }
    Ok(())
}

/// Seventeen significant digits, enough for a lossless round trip.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

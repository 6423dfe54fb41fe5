//! Random assignment benchmark: exact minimum-cost perfect matchings on
//! random `n × n` cost matrices.
//!
//! With i.i.d. exponential costs of mean `n`, `A_n = min_π (1/n) Σ C_{i,π(i)}`
//! has `E[A_n] = Σ_{k ≤ n} 1/k²`, which tends to `ζ(2) = π²/6`. With
//! uniform `[0, 1]` costs the raw sum tends to the same limit.

use std::io::Write;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::fmt17;
use crate::seed::derive_seed;
use crate::stats::MeanEstimate;

pub const ZETA_2: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostLaw {
    /// i.i.d. exponential with mean `n`; objective divided by `n`.
    ExponentialMeanN,
    /// i.i.d. uniform on `[0, 1]`; objective is the raw sum.
    Uniform01,
}

impl CostLaw {
    pub fn name(self) -> &'static str {
        match self {
            CostLaw::ExponentialMeanN => "exponential_mean_n",
            CostLaw::Uniform01 => "uniform01",
        }
    }

    /// Scale applied to the raw optimal sum.
    pub fn normalization(self, n: usize) -> f64 {
        match self {
            CostLaw::ExponentialMeanN => 1.0 / n as f64,
            CostLaw::Uniform01 => 1.0,
        }
    }

    /// Exact finite-`n` mean where known, otherwise the `n → ∞` limit.
    pub fn reference_value(self, n: usize) -> f64 {
        match self {
            CostLaw::ExponentialMeanN => parisi_partial_sum(n),
            CostLaw::Uniform01 => ZETA_2,
        }
    }
}

impl std::str::FromStr for CostLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential_mean_n" | "exponential" => Ok(CostLaw::ExponentialMeanN),
            "uniform01" | "uniform" => Ok(CostLaw::Uniform01),
            other => Err(Error::InvalidArgument(format!(
                "unknown cost law `{other}`"
            ))),
        }
    }
}

/// Row-major `n × n` matrix of nonnegative finite costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    costs: Vec<f64>,
    law: CostLaw,
}

impl CostMatrix {
    pub fn new(n: usize, costs: Vec<f64>, law: CostLaw) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if costs.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} costs, got {}",
                n * n,
                costs.len()
            )));
        }
        if let Some(c) = costs.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "cost {c} is not a finite nonnegative number"
            )));
        }
        Ok(Self { n, costs, law })
    }

    pub fn from_rows(rows: &[Vec<f64>], law: CostLaw) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("cost matrix must be square".into()));
        }
        Self::new(n, rows.concat(), law)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn law(&self) -> CostLaw {
        self.law
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.n + j]
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// `Σ_i C_{i,π(i)}` without normalization.
    pub fn raw_cost(&self, permutation: &[usize]) -> f64 {
        permutation
            .iter()
            .enumerate()
            .map(|(i, &j)| self.get(i, j))
            .sum()
    }
}

/// i.i.d. costs from `law`, deterministic in `seed`.
pub fn sample_costs(n: usize, law: CostLaw, seed: u64) -> Result<CostMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let scale = n as f64;
    let costs = (0..n * n)
        .map(|_| match law {
            CostLaw::ExponentialMeanN => scale * rng.sample::<f64, _>(Exp1),
            CostLaw::Uniform01 => rng.random::<f64>(),
        })
        .collect();
    CostMatrix::new(n, costs, law)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    /// Row `i` is matched to column `permutation[i]`.
    pub permutation: Vec<usize>,
    /// Raw sum scaled by the law's normalization.
    pub objective: f64,
    pub raw_cost: f64,
    pub normalization: f64,
    /// Dual potentials with `row_duals[i] + col_duals[j] ≤ C_ij`.
    pub row_duals: Vec<f64>,
    pub col_duals: Vec<f64>,
}

impl AssignmentResult {
    /// Largest violation of dual feasibility and complementary slackness.
    pub fn certificate_gap(&self, m: &CostMatrix) -> f64 {
        let n = m.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let reduced = m.get(i, j) - self.row_duals[i] - self.col_duals[j];
                worst = worst.max(-reduced);
                if self.permutation[i] == j {
                    worst = worst.max(reduced.abs());
                }
            }
        }
        worst
    }
}

/// Exact assignment by successive shortest augmenting paths with
/// potentials, `O(n³)`.
pub fn solve_exact(m: &CostMatrix) -> AssignmentResult {
    let n = m.n();
    // 1-based: column 0 is the virtual source of each augmentation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = m.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut permutation = vec![0; n];
    for j in 1..=n {
        permutation[owner[j] - 1] = j - 1;
    }
    let raw_cost = m.raw_cost(&permutation);
    let normalization = m.law().normalization(n);
    AssignmentResult {
        permutation,
        objective: raw_cost * normalization,
        raw_cost,
        normalization,
        row_duals: u[1..].to_vec(),
        col_duals: v[1..].to_vec(),
    }
}

/// `Σ_{k=1}^n 1/k²`.
pub fn parisi_partial_sum(n: usize) -> f64 {
    // smallest terms first
    (1..=n).rev().map(|k| 1.0 / (k as f64 * k as f64)).sum()
}

/// Mean and standard error of the optimal objective over `replicates`
/// independent instances. Instance `r` uses seed `derive_seed(seed, r)`.
pub fn estimate_mean_objective(
    n: usize,
    law: CostLaw,
    replicates: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    if replicates < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 replicates, got {replicates}"
        )));
    }
    let objectives: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| sample_costs(n, law, derive_seed(seed, r)).map(|m| solve_exact(&m).objective))
        .collect::<Result<_>>()?;
    Ok(MeanEstimate::from_values(&objectives))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub law: CostLaw,
    pub replicates: usize,
    pub mean: f64,
    pub std_error: f64,
    pub parisi_value: f64,
    pub abs_gap: f64,
}

impl BenchRow {
    pub fn new(n: usize, law: CostLaw, est: &MeanEstimate) -> Self {
        let reference = law.reference_value(n);
        Self {
            n,
            law,
            replicates: est.count,
            mean: est.mean,
            std_error: est.std_error,
            parisi_value: reference,
            abs_gap: (est.mean - reference).abs(),
        }
    }
}

pub const BENCH_CSV_HEADER: &str = "n,law,replicates,mean,std_error,parisi_value,abs_gap";

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], mut out: W) -> Result<()> {
    let mut buf = String::from(BENCH_CSV_HEADER);
    buf.push('\n');
    for r in rows {
        buf.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            r.law.name(),
            r.replicates,
            fmt17(r.mean),
            fmt17(r.std_error),
            fmt17(r.parisi_value),
            fmt17(r.abs_gap)
        ));
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(m: &CostMatrix) -> f64 {
        fn rec(m: &CostMatrix, row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
            if row == m.n() {
                *best = best.min(acc);
                return;
            }
            for j in 0..m.n() {
                if !used[j] {
                    used[j] = true;
                    rec(m, row + 1, used, acc + m.get(row, j), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(m, 0, &mut vec![false; m.n()], 0.0, &mut best);
        best
    }

    #[test]
    fn dominant_diagonal_gives_identity() {
        let n = 6;
        let costs = (0..n * n)
            .map(|k| if k / n == k % n { 0.0 } else { 1.0 })
            .collect();
        let m = CostMatrix::new(n, costs, CostLaw::Uniform01).unwrap();
        let r = solve_exact(&m);
        assert_eq!(r.permutation, (0..n).collect::<Vec<_>>());
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn two_by_two() {
        let m =
            CostMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0]], CostLaw::Uniform01).unwrap();
        let r = solve_exact(&m);
        assert_eq!(r.permutation, vec![0, 1]);
        assert_eq!(r.raw_cost, 2.0);
        assert!(r.certificate_gap(&m) < 1e-12);
    }

    #[test]
    fn matches_brute_force_small() {
        for n in 1..=6 {
            for rep in 0..30 {
                let m =
                    sample_costs(n, CostLaw::ExponentialMeanN, derive_seed(n as u64, rep)).unwrap();
                let r = solve_exact(&m);
                let bf = brute_force(&m);
                assert!((r.raw_cost - bf).abs() < 1e-9 * (1.0 + bf));
                assert!((r.objective - r.raw_cost / n as f64).abs() < 1e-12);
                assert!(r.certificate_gap(&m) < 1e-9 * (1.0 + bf));
                let mut seen = r.permutation.clone();
                seen.sort_unstable();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_costs(5, CostLaw::Uniform01, 3).unwrap();
        let b = sample_costs(5, CostLaw::Uniform01, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_costs(5, CostLaw::Uniform01, 4).unwrap());
        assert_eq!(
            sample_costs(1, CostLaw::ExponentialMeanN, 1)
                .unwrap()
                .costs()
                .len(),
            1
        );
    }

    #[test]
    fn parisi_sums() {
        assert_eq!(parisi_partial_sum(1), 1.0);
        assert!((parisi_partial_sum(3) - 1.361_111_111_111_111).abs() < 1e-12);
        assert!((parisi_partial_sum(100) - 1.634_983_900_184_892).abs() < 1e-12);
        let mut prev = 0.0;
        for n in 1..200 {
            let s = parisi_partial_sum(n);
            assert!(s > prev && s < ZETA_2);
            prev = s;
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(CostMatrix::new(2, vec![1.0, -1.0, 0.0, 0.0], CostLaw::Uniform01).is_err());
        assert!(CostMatrix::new(2, vec![1.0, 0.0], CostLaw::Uniform01).is_err());
        assert!(sample_costs(0, CostLaw::Uniform01, 0).is_err());
        assert!(estimate_mean_objective(3, CostLaw::Uniform01, 1, 0).is_err());
        assert!("gaussian".parse::<CostLaw>().is_err());
    }
}

//! Recursive tree process of `X = min_j (ξ_j - X_j)` on depth-truncated
//! Poisson weighted infinite trees.
//!
//! Each node carries a rate-1 Poisson process `ξ_1 < ξ_2 < …` of child
//! edge weights, generated lazily as running sums of standard exponential
//! spacings. Leaves at the truncation depth draw their value from a
//! boundary law. All randomness is keyed by the node's path from the root,
//! never by the order in which the recursion happens to visit nodes, so two
//! evaluations of the same tree with different boundary draws see exactly
//! the same edge weights.
//!
//! Evaluation is a windowed min-recursion. A child only matters while it
//! can still undercut the running minimum, so each call carries a window
//! `(lo, hi)` and returns the exact value only when it lies inside;
//! otherwise it returns a bound on the correct side. Arrivals with
//! `ξ_j - q_hi` above the running minimum are skipped, where `q_hi` is the
//! Logistic `1 - 1e-6` quantile bounding child values.

use std::io::Write;

use rand::RngCore;
use rand_distr::{Distribution, Exp1, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::fmt17;
use crate::logistic::{cdf_unchecked, LogisticKernel};
use crate::seed::{mix64, GOLDEN};
use crate::stats::{ks_statistic, EmpiricalTail, MeanEstimate};

/// Largest truncation depth accepted.
pub const MAX_DEPTH: u32 = 14;
/// Smallest admissible `xi_cutoff`.
pub const MIN_XI_CUTOFF: f64 = 8.0;
/// Per-evaluation node budget.
pub const DEFAULT_NODE_LIMIT: u64 = 50_000_000;

/// Logistic quantile at `1 - 1e-6`.
pub fn q_hi() -> f64 {
    let p: f64 = 1.0 - 1e-6;
    (p / (1.0 - p)).ln()
}

const ROLE_XI: u64 = 0x5849;
const ROLE_BOUNDARY: u64 = 0xb0_0000;

/// What a substream is used for at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Xi,
    Boundary(u32),
}

/// Identifies a node: a hash of the master seed, the replicate and the
/// child-index path from the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeKey(u64);

impl NodeKey {
    pub fn child(self, index: u64) -> Self {
        NodeKey(mix64(
            self.0 ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN)),
        ))
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

/// Deterministic map from `(master_seed, replicate, path, role)` to an
/// independent stream of random bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InnovationStream {
    master_seed: u64,
}

impl InnovationStream {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Root of the tree used by `replicate`.
    pub fn root(&self, replicate: u64) -> NodeKey {
        NodeKey(mix64(mix64(self.master_seed) ^ mix64(replicate ^ GOLDEN)))
    }

    /// Node reached from the root of `replicate` along `path`.
    pub fn node(&self, replicate: u64, path: &[u64]) -> NodeKey {
        path.iter().fold(self.root(replicate), |k, &i| k.child(i))
    }

    pub fn substream(&self, node: NodeKey, role: Role) -> Substream {
        let tag = match role {
            Role::Xi => ROLE_XI,
            Role::Boundary(t) => ROLE_BOUNDARY + u64::from(t),
        };
        Substream {
            key: mix64(node.0 ^ mix64(tag)),
            counter: 0,
        }
    }
}

/// Counter-based generator: the `k`-th output is a hash of `(key, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substream {
    key: u64,
    counter: u64,
}

impl RngCore for Substream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key ^ mix64(self.counter.wrapping_mul(GOLDEN).wrapping_add(GOLDEN)));
        self.counter += 1;
        out
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryLaw {
    Logistic,
    PointMass { value: f64 },
    Uniform { low: f64, high: f64 },
}

impl BoundaryLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            BoundaryLaw::Logistic => Ok(()),
            BoundaryLaw::PointMass { value } if value.is_finite() => Ok(()),
            BoundaryLaw::Uniform { low, high }
                if low.is_finite() && high.is_finite() && low < high =>
            {
                Ok(())
            }
            other => Err(Error::InvalidArgument(format!(
                "invalid boundary law {other:?}"
            ))),
        }
    }

    fn sample(&self, rng: &mut Substream) -> f64 {
        match *self {
            BoundaryLaw::Logistic => LogisticKernel.sample(rng),
            BoundaryLaw::PointMass { value } => value,
            BoundaryLaw::Uniform { low, high } => Uniform::new(low, high)
                .expect("validated bounds")
                .sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwitConfig {
    pub depth: u32,
    pub xi_cutoff: f64,
    pub boundary_law: BoundaryLaw,
    pub replicates: usize,
    pub master_seed: u64,
}

impl Default for PwitConfig {
    fn default() -> Self {
        Self {
            depth: 6,
            xi_cutoff: 30.0,
            boundary_law: BoundaryLaw::Logistic,
            replicates: 10_000,
            master_seed: 0x5eed,
        }
    }
}

impl PwitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth > MAX_DEPTH {
            return Err(Error::InvalidArgument(format!(
                "depth {} exceeds the guard of {MAX_DEPTH}",
                self.depth
            )));
        }
        if !self.xi_cutoff.is_finite() || self.xi_cutoff < MIN_XI_CUTOFF {
            return Err(Error::InvalidArgument(format!(
                "xi_cutoff must be finite and at least {MIN_XI_CUTOFF}, got {}",
                self.xi_cutoff
            )));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be positive".into()));
        }
        self.boundary_law.validate()
    }

    pub fn with_depth(&self, depth: u32) -> Self {
        Self {
            depth,
            ..self.clone()
        }
    }
}

/// Value of one tree evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSample {
    pub value: f64,
    /// The `xi_cutoff` stopped a search the `q_hi` bound had not settled.
    pub truncated: bool,
    pub nodes: u64,
}

struct Evaluator<'a> {
    config: &'a PwitConfig,
    stream: InnovationStream,
    tag: u32,
    q_hi: f64,
    node_limit: u64,
    nodes: u64,
    truncated: bool,
}

impl Evaluator<'_> {
    fn eval(&mut self, key: NodeKey, level: u32, lo: f64, hi: f64) -> Result<f64> {
        self.nodes += 1;
        if self.nodes > self.node_limit {
            return Err(Error::NodeLimit {
                limit: self.node_limit,
            });
        }
        if level == self.config.depth {
            let mut rng = self.stream.substream(key, Role::Boundary(self.tag));
            return Ok(self.config.boundary_law.sample(&mut rng));
        }
        let mut arrivals = self.stream.substream(key, Role::Xi);
        let mut xi = 0.0;
        let mut best = f64::INFINITY;
        for j in 0u64.. {
            let eff = best.min(hi);
            xi += <Exp1 as Distribution<f64>>::sample(&Exp1, &mut arrivals);
            if xi - self.q_hi >= eff {
                break;
            }
            if xi > self.config.xi_cutoff {
                self.truncated = true;
                break;
            }
            let v = self.eval(key.child(j), level + 1, xi - eff, xi - lo)?;
            let candidate = xi - v;
            if candidate < best {
                best = candidate;
                if best <= lo {
                    break;
                }
            }
        }
        Ok(best)
    }
}

/// Evaluates the root of replicate `replicate` with boundary draws keyed by
/// `boundary_tag`.
pub fn sample_root(
    config: &PwitConfig,
    stream: &InnovationStream,
    replicate: u64,
    boundary_tag: u32,
) -> Result<RootSample> {
    sample_root_with_limit(config, stream, replicate, boundary_tag, DEFAULT_NODE_LIMIT)
}

pub fn sample_root_with_limit(
    config: &PwitConfig,
    stream: &InnovationStream,
    replicate: u64,
    boundary_tag: u32,
    node_limit: u64,
) -> Result<RootSample> {
    config.validate()?;
    let mut ev = Evaluator {
        config,
        stream: *stream,
        tag: boundary_tag,
        q_hi: q_hi(),
        node_limit,
        nodes: 0,
        truncated: false,
    };
    let value = ev.eval(stream.root(replicate), 0, f64::NEG_INFINITY, f64::INFINITY)?;
    let truncated = ev.truncated || !value.is_finite();
    Ok(RootSample {
        value,
        truncated,
        nodes: ev.nodes,
    })
}

/// Root pairs from shared edge weights and independent boundary draws
/// (tags 1 and 2), in replicate order.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSamples {
    pub depth: u32,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub truncated: Vec<bool>,
    pub nodes: u64,
}

impl CouplingSamples {
    pub fn gaps(&self) -> Vec<f64> {
        self.first
            .iter()
            .zip(&self.second)
            .map(|(a, b)| (a - b).abs())
            .collect()
    }

    pub fn minima(&self) -> Vec<f64> {
        self.first
            .iter()
            .zip(&self.second)
            .map(|(a, b)| a.min(*b))
            .collect()
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.first
            .iter()
            .copied()
            .zip(self.second.iter().copied())
            .collect()
    }
}

/// Runs every replicate of `config` twice on the same edge weights.
pub fn simulate_pairs(config: &PwitConfig) -> Result<CouplingSamples> {
    config.validate()?;
    let stream = InnovationStream::new(config.master_seed);
    let rows: Vec<(RootSample, RootSample)> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let a = sample_root(config, &stream, r, 1)?;
            let b = sample_root(config, &stream, r, 2)?;
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    Ok(CouplingSamples {
        depth: config.depth,
        first: rows.iter().map(|(a, _)| a.value).collect(),
        second: rows.iter().map(|(_, b)| b.value).collect(),
        truncated: rows
            .iter()
            .map(|(a, b)| a.truncated || b.truncated)
            .collect(),
        nodes: rows.iter().map(|(a, b)| a.nodes + b.nodes).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub depth: u32,
    pub replicates: usize,
    pub mean_abs_root_gap: f64,
    pub gap_std_error: f64,
    pub rms_root_gap: f64,
    pub ks_statistic_min_vs_logistic: f64,
    pub ks_statistic_root_vs_logistic: f64,
    pub truncation_flag_rate: f64,
}

impl CouplingRow {
    pub fn from_samples(s: &CouplingSamples) -> Self {
        let gaps = s.gaps();
        let est = MeanEstimate::from_values(&gaps);
        let n = gaps.len().max(1) as f64;
        let rms = (gaps.iter().map(|g| g * g).sum::<f64>() / n).sqrt();
        Self {
            depth: s.depth,
            replicates: gaps.len(),
            mean_abs_root_gap: est.mean,
            gap_std_error: if est.std_error.is_finite() {
                est.std_error
            } else {
                0.0
            },
            rms_root_gap: rms,
            ks_statistic_min_vs_logistic: ks_statistic(&s.minima(), cdf_unchecked),
            ks_statistic_root_vs_logistic: ks_statistic(&s.first, cdf_unchecked),
            truncation_flag_rate: s.truncated.iter().filter(|t| **t).count() as f64 / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub config: PwitConfig,
    pub depths: Vec<u32>,
    pub rows: Vec<CouplingRow>,
    pub code_version: String,
}

impl CouplingReport {
    pub const CSV_HEADER: &'static str = "depth,replicates,mean_abs_root_gap,gap_std_error,rms_root_gap,ks_statistic_min_vs_logistic,ks_statistic_root_vs_logistic,truncation_flag_rate";

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = String::from(Self::CSV_HEADER);
        buf.push('\n');
        for r in &self.rows {
            buf.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.depth,
                r.replicates,
                fmt17(r.mean_abs_root_gap),
                fmt17(r.gap_std_error),
                fmt17(r.rms_root_gap),
                fmt17(r.ks_statistic_min_vs_logistic),
                fmt17(r.ks_statistic_root_vs_logistic),
                fmt17(r.truncation_flag_rate),
            ));
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }
}

/// The coupling experiment at a single depth (`config.depth`).
pub fn run_coupling(config: &PwitConfig) -> Result<CouplingReport> {
    run_coupling_ladder(config, &[config.depth]).map(|(report, _)| report)
}

/// The coupling experiment across `depths`, returning the raw pairs too.
/// Replicate `r` uses the same tree at every depth, truncated differently.
pub fn run_coupling_ladder(
    config: &PwitConfig,
    depths: &[u32],
) -> Result<(CouplingReport, Vec<CouplingSamples>)> {
    let mut rows = Vec::with_capacity(depths.len());
    let mut samples = Vec::with_capacity(depths.len());
    for &d in depths {
        let s = simulate_pairs(&config.with_depth(d))?;
        rows.push(CouplingRow::from_samples(&s));
        samples.push(s);
    }
    Ok((
        CouplingReport {
            config: config.clone(),
            depths: depths.to_vec(),
            rows,
            code_version: crate::VERSION.to_string(),
        },
        samples,
    ))
}

/// Empirical law of `X⁽¹⁾ ∧ X⁽²⁾` from the coupling at `config.depth`.
pub fn estimate_min_law(config: &PwitConfig) -> Result<EmpiricalTail> {
    Ok(EmpiricalTail::new(simulate_pairs(config)?.minima()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(depth: u32, replicates: usize) -> PwitConfig {
        PwitConfig {
            depth,
            replicates,
            ..PwitConfig::default()
        }
    }

    #[test]
    fn q_hi_value() {
        assert!((q_hi() - 13.815_509_557_963_773).abs() < 1e-6);
    }

    #[test]
    fn substreams_replay_and_differ() {
        let s = InnovationStream::new(42);
        let node = s.node(3, &[0, 2, 1]);
        let mut a = s.substream(node, Role::Xi);
        let mut b = s.substream(node, Role::Xi);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_eq!(xa, xb);
        let mut c = s.substream(s.node(3, &[0, 2, 2]), Role::Xi);
        assert_ne!(xa[0], c.next_u64());
        let mut d = s.substream(node, Role::Boundary(1));
        let mut e = s.substream(node, Role::Boundary(2));
        assert_ne!(d.next_u64(), e.next_u64());
        assert_ne!(s.root(0), s.root(1));
        assert_ne!(InnovationStream::new(43).root(0), s.root(0));
    }

    #[test]
    fn substream_bits_look_uniform() {
        let s = InnovationStream::new(1);
        let mut r = s.substream(s.root(0), Role::Xi);
        let n = 200_000;
        let mean = (0..n)
            .map(|_| (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * (1.0f64 / 12.0 / n as f64).sqrt());
    }

    #[test]
    fn depth_zero_is_one_boundary_draw() {
        let c = cfg(0, 1);
        let s = InnovationStream::new(c.master_seed);
        let r = sample_root(&c, &s, 0, 1).unwrap();
        assert_eq!(r.nodes, 1);
        let mut direct = s.substream(s.root(0), Role::Boundary(1));
        assert_eq!(r.value, LogisticKernel.sample(&mut direct));
    }

    #[test]
    fn evaluation_is_bit_reproducible() {
        let c = cfg(5, 1);
        let s = InnovationStream::new(9);
        for rep in 0..20 {
            let a = sample_root(&c, &s, rep, 1).unwrap();
            let b = sample_root(&c, &s, rep, 1).unwrap();
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }

    /// Full evaluation without windows, for checking the pruned recursion.
    fn brute(c: &PwitConfig, s: &InnovationStream, key: NodeKey, level: u32, tag: u32) -> f64 {
        if level == c.depth {
            return c
                .boundary_law
                .sample(&mut s.substream(key, Role::Boundary(tag)));
        }
        let mut arr = s.substream(key, Role::Xi);
        let mut xi = 0.0;
        let mut best = f64::INFINITY;
        for j in 0u64.. {
            xi += <Exp1 as Distribution<f64>>::sample(&Exp1, &mut arr);
            if xi > c.xi_cutoff.min(12.0) {
                break;
            }
            best = best.min(xi - brute(c, s, key.child(j), level + 1, tag));
        }
        best
    }

    #[test]
    fn pruned_recursion_matches_exhaustive_search() {
        // cutoff 12 in the brute force keeps it tractable; children beyond it
        // would need values above 12 - 13.8 + min, which the pruned search
        // also ignores only when they cannot matter
        let c = PwitConfig {
            depth: 3,
            xi_cutoff: 12.0,
            replicates: 1,
            ..PwitConfig::default()
        };
        let s = InnovationStream::new(77);
        for rep in 0..30 {
            let fast = sample_root(&c, &s, rep, 1).unwrap();
            let slow = brute(&c, &s, s.root(rep), 0, 1);
            if !fast.truncated {
                assert!(
                    (fast.value - slow).abs() < 1e-12,
                    "rep {rep}: {} vs {slow}",
                    fast.value
                );
            }
        }
    }

    #[test]
    fn point_mass_boundaries_never_separate() {
        let c = PwitConfig {
            boundary_law: BoundaryLaw::PointMass { value: 0.25 },
            ..cfg(4, 200)
        };
        let s = simulate_pairs(&c).unwrap();
        assert!(s.gaps().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn swapping_tags_swaps_roots() {
        let c = cfg(4, 1);
        let s = InnovationStream::new(c.master_seed);
        for rep in 0..10 {
            let a1 = sample_root(&c, &s, rep, 1).unwrap().value;
            let a2 = sample_root(&c, &s, rep, 2).unwrap().value;
            let pair = simulate_pairs(&PwitConfig {
                replicates: rep as usize + 1,
                ..c.clone()
            })
            .unwrap();
            assert_eq!(pair.first[rep as usize], a1);
            assert_eq!(pair.second[rep as usize], a2);
        }
    }

    #[test]
    fn config_guards() {
        assert!(cfg(15, 10).validate().is_err());
        assert!(PwitConfig {
            xi_cutoff: 7.0,
            ..cfg(2, 10)
        }
        .validate()
        .is_err());
        assert!(cfg(2, 0).validate().is_err());
        assert!(PwitConfig {
            boundary_law: BoundaryLaw::Uniform {
                low: 1.0,
                high: 0.0
            },
            ..cfg(2, 10)
        }
        .validate()
        .is_err());
        cfg(MAX_DEPTH, 1).validate().unwrap();
    }

    #[test]
    fn node_limit_is_enforced() {
        let c = cfg(8, 1);
        let s = InnovationStream::new(c.master_seed);
        assert!(matches!(
            sample_root_with_limit(&c, &s, 0, 1, 5),
            Err(Error::NodeLimit { limit: 5 })
        ));
    }

    #[test]
    fn single_replicate_min_law_is_one_point() {
        let t = estimate_min_law(&cfg(2, 1)).unwrap();
        assert_eq!(t.len(), 1);
        let v = t.sorted()[0];
        assert_eq!(t.tail(v - 1e-9), 1.0);
        assert_eq!(t.tail(v), 0.0);
    }

    #[test]
    fn report_csv_has_one_row_per_depth() {
        let (report, _) = run_coupling_ladder(&cfg(0, 50), &[0, 1, 2]).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with(CouplingReport::CSV_HEADER));
    }
}

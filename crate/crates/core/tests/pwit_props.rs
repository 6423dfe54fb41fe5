use rde_lab::logistic::{cdf_unchecked, tail_unchecked};
use rde_lab::pwit::{
    estimate_min_law, run_coupling, sample_root, CouplingRow, InnovationStream, PwitConfig,
};
use rde_lab::stats::{ks_p_value, ks_statistic};

fn golden_rows() -> Vec<CouplingRow> {
    let v: serde_json::Value =
        serde_json::from_str(include_str!("golden/coupling_ladder.json")).unwrap();
    serde_json::from_value(v["rows"].clone()).unwrap()
}

#[test]
fn root_marginal_stays_logistic() {
    let seed = 1;
    let stream = InnovationStream::new(seed);
    for depth in 1..=6 {
        let config = PwitConfig {
            depth,
            master_seed: seed,
            ..PwitConfig::default()
        };
        let roots: Vec<f64> = (0..config.replicates as u64)
            .map(|r| sample_root(&config, &stream, r, 1).unwrap().value)
            .collect();
        let d = ks_statistic(&roots, cdf_unchecked);
        let p = ks_p_value(d, roots.len());
        assert!(p > 0.01, "depth {depth}: KS {d}, p {p}");
    }
}

#[test]
fn depth_zero_min_law_is_squared_tail() {
    let config = PwitConfig {
        depth: 0,
        master_seed: 17,
        ..PwitConfig::default()
    };
    let law = estimate_min_law(&config).unwrap();
    let n = law.len() as f64;
    for x in [-2.0, -0.5, 0.0, 0.7, 2.0] {
        let p = tail_unchecked(x).powi(2);
        let se = (p * (1.0 - p) / n).sqrt();
        assert!((law.tail(x) - p).abs() <= 4.0 * se, "x = {x}");
    }
}

#[test]
fn truncation_is_rare_at_default_cutoff_through_depth_8() {
    for row in golden_rows().iter().filter(|r| r.depth <= 8) {
        assert!(
            row.truncation_flag_rate <= 1e-3,
            "depth {}: {}",
            row.depth,
            row.truncation_flag_rate
        );
    }
}

#[test]
fn doubling_the_cutoff_moves_the_gap_less_than_one_se() {
    let base = golden_rows().into_iter().find(|r| r.depth == 6).unwrap();
    let config = PwitConfig {
        depth: 6,
        xi_cutoff: 60.0,
        ..PwitConfig::default()
    };
    let wide = &run_coupling(&config).unwrap().rows[0];
    let diff = (wide.mean_abs_root_gap - base.mean_abs_root_gap).abs();
    assert!(
        diff < base.gap_std_error,
        "{diff} vs SE {}",
        base.gap_std_error
    );
}

#[test]
fn flagged_trees_at_depth_ten_keep_their_gap_under_a_doubled_cutoff() {
    let base = PwitConfig {
        depth: 10,
        replicates: 1_000,
        master_seed: 3,
        ..PwitConfig::default()
    };
    let wide = PwitConfig {
        xi_cutoff: 60.0,
        ..base.clone()
    };
    let a = &run_coupling(&base).unwrap().rows[0];
    let b = &run_coupling(&wide).unwrap().rows[0];
    assert_eq!(b.truncation_flag_rate, 0.0);
    let diff = (a.mean_abs_root_gap - b.mean_abs_root_gap).abs();
    assert!(diff < a.gap_std_error, "{diff} vs SE {}", a.gap_std_error);
}

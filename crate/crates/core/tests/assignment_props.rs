use proptest::prelude::*;
use rde_lab::assignment::{
    estimate_mean_objective, sample_costs, solve_exact, CostLaw, CostMatrix,
};

fn brute_force(m: &CostMatrix) -> f64 {
    fn go(m: &CostMatrix, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == m.n() {
            *best = best.min(acc);
            return;
        }
        for j in 0..m.n() {
            if !used[j] {
                used[j] = true;
                go(m, row + 1, used, acc + m.get(row, j), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(m, 0, &mut vec![false; m.n()], 0.0, &mut best);
    best
}

fn matrix() -> impl Strategy<Value = CostMatrix> {
    (1usize..=6).prop_flat_map(|n| {
        prop::collection::vec(0.0f64..100.0, n * n)
            .prop_map(move |c| CostMatrix::new(n, c, CostLaw::Uniform01).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solver_is_optimal_with_certificate(m in matrix()) {
        let r = solve_exact(&m);
        let mut seen = r.permutation.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..m.n()).collect::<Vec<_>>());
        let recomputed: f64 = r.permutation.iter().enumerate().map(|(i, &j)| m.get(i, j)).sum();
        prop_assert!((recomputed - r.raw_cost).abs() <= 1e-9);
        prop_assert!((r.raw_cost - brute_force(&m)).abs() <= 1e-9);
        prop_assert!(r.certificate_gap(&m) <= 1e-9);
    }
}

#[test]
fn dominant_diagonal_gives_identity() {
    let n = 6;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
        .collect();
    let r = solve_exact(&CostMatrix::from_rows(&rows, CostLaw::Uniform01).unwrap());
    assert_eq!(r.permutation, (0..n).collect::<Vec<_>>());
    assert_eq!(r.objective, 0.0);
}

#[test]
fn exponential_entries_have_mean_n() {
    let n = 50;
    let mut entries = Vec::new();
    for seed in 0..20 {
        entries.extend_from_slice(
            sample_costs(n, CostLaw::ExponentialMeanN, seed)
                .unwrap()
                .costs(),
        );
    }
    let mean = entries.iter().sum::<f64>() / entries.len() as f64;
    // exponential: sd = mean
    let se = n as f64 / (entries.len() as f64).sqrt();
    assert!((mean - n as f64).abs() <= 3.0 * se, "{mean}");
}

#[test]
fn same_seed_same_matrix() {
    let a = sample_costs(7, CostLaw::ExponentialMeanN, 3).unwrap();
    assert_eq!(a, sample_costs(7, CostLaw::ExponentialMeanN, 3).unwrap());
    assert_ne!(a, sample_costs(7, CostLaw::ExponentialMeanN, 4).unwrap());
}

#[test]
fn single_replicate_is_rejected() {
    assert!(estimate_mean_objective(3, CostLaw::Uniform01, 1, 0).is_err());
}

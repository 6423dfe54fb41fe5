//! Regenerates the reference data under `tests/golden/`.
//!
//! ```text
//! cargo run --release -p rde-lab --example oracle_run -- [operators|beta|pwit|all]
//! ```
//!
//! The beta reference is computed at four times the default resolution; the
//! coupling reference uses the default configuration with 10^4 replicates.

use std::path::PathBuf;
use std::time::Instant;

use rde_lab::beta::run_recursion;
use rde_lab::operators::iterate_to_fixed_point;
use rde_lab::pwit::{run_coupling_ladder, PwitConfig};
use rde_lab::stats::paired_decrease_z;
use rde_lab::{GridSpec, QuadratureRule, TailFunction};
use serde_json::json;

const RULE: QuadratureRule = QuadratureRule::Simpson;

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn save(name: &str, value: serde_json::Value) {
    let path = golden_dir().join(name);
    std::fs::create_dir_all(golden_dir()).expect("golden dir");
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap() + "\n")
        .expect("write golden");
    println!("wrote {}", path.display());
}

fn operators() {
    let threshold = 1e-2;
    let traj = iterate_to_fixed_point(
        TailFunction::logistic_tail_squared(GridSpec::default()),
        400,
        1e-9,
        RULE,
    )
    .unwrap();
    let first = traj
        .iterates
        .iter()
        .find(|it| it.sup_distance_to_logistic_tail < threshold)
        .map(|it| it.index)
        .expect("threshold reached within 400 iterations");
    let checkpoints: Vec<_> = [1usize, 10, first, 200, 400]
        .iter()
        .filter_map(|&n| traj.iterates.get(n))
        .map(|it| json!({"n": it.index, "sup_distance": it.sup_distance_to_logistic_tail}))
        .collect();
    save(
        "operator_iteration.json",
        json!({
            "seed": "logistic_tail_squared",
            "grid": GridSpec::default(),
            "threshold": threshold,
            "first_index_below_threshold": first,
            "checkpoints": checkpoints,
        }),
    );
}

fn beta() {
    let resolution = 40_000;
    let stop_tolerance = 1e-5;
    let seq = run_recursion(100_000, stop_tolerance, resolution, RULE).unwrap();
    assert!(seq.stopped_early);
    save(
        "beta_recursion.json",
        json!({
            "resolution": resolution,
            "stop_tolerance": stop_tolerance,
            "curves": seq.curves.len(),
            "terminal_sup": seq.last().sup(),
            "terminal_beta_at_zero": seq.last().values()[0],
            "beta_at_zero_head": &seq.values_at_zero[..6],
        }),
    );
}

fn pwit() {
    let config = PwitConfig::default();
    let depths = [0u32, 2, 4, 6, 8, 10];
    let (report, samples) = run_coupling_ladder(&config, &depths).unwrap();
    let paired: Vec<f64> = samples
        .windows(2)
        .map(|w| paired_decrease_z(&w[0].gaps(), &w[1].gaps()))
        .collect();
    save(
        "coupling_ladder.json",
        json!({
            "config": config,
            "rows": report.rows,
            "paired_decrease_z": paired,
        }),
    );
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());
    let t = Instant::now();
    match which.as_str() {
        "operators" => operators(),
        "beta" => beta(),
        "pwit" => pwit(),
        "all" => {
            operators();
            beta();
            pwit();
        }
        other => panic!("unknown target {other}"),
    }
    println!("done in {:.1} s", t.elapsed().as_secs_f64());
}

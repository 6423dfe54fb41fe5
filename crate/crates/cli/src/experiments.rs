use rand::rngs::StdRng;
use rand::SeedableRng;
use rde_lab::assignment::{estimate_mean_objective, write_bench_csv, BenchRow, CostLaw};
use rde_lab::beta::run_recursion;
use rde_lab::logistic::identity_checks;
use rde_lab::operators::{identity_residual, iterate_to_fixed_point, random_admissible_tail};
use rde_lab::pwit::{run_coupling_ladder, PwitConfig};
use rde_lab::seed::derive_seed;
use rde_lab::stats::paired_decrease_z;
use rde_lab::{GridSpec, QuadratureRule, TailFunction};
use serde::Serialize;
use serde_json::json;

use crate::config::{Command, ExperimentConfig, OutputFormat};
use crate::RunError;

const RULE: QuadratureRule = QuadratureRule::Simpson;
const IDENTITY_TOLERANCE: f64 = 1e-6;
const ORDER_SLACK: f64 = 1e-12;

#[derive(Debug, Default)]
pub(crate) struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Vec<String>,
    pub violation: Option<(String, String)>,
}

impl Artifacts {
    fn violate(&mut self, invariant: &str, detail: String) {
        if self.violation.is_none() {
            self.violation = Some((invariant.to_string(), detail));
        }
    }

    fn json<T: Serialize>(&mut self, name: String, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("results serialize");
        bytes.push(b'\n');
        self.files.push((name, bytes));
    }

    fn csv(
        &mut self,
        name: String,
        write: impl FnOnce(&mut Vec<u8>) -> rde_lab::Result<()>,
    ) -> Result<(), RunError> {
        let mut bytes = Vec::new();
        write(&mut bytes)?;
        self.files.push((name, bytes));
        Ok(())
    }
}

pub(crate) fn execute(config: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let mut out = Artifacts::default();
    match config.command {
        Command::LogisticCheck => logistic_check(config, &mut out)?,
        Command::IterateT => iterate_t(config, &mut out)?,
        Command::Beta => beta(config, &mut out)?,
        Command::Coupling => coupling(config, &mut out)?,
        Command::Assignment => assignment(config, &mut out)?,
        Command::IdentityCheck => identity_check(config, &mut out)?,
    }
    Ok(out)
}

fn grid(config: &ExperimentConfig) -> Result<GridSpec, RunError> {
    Ok(GridSpec::symmetric(config.grid.x_max, config.grid.step)?)
}

fn fmt17(x: f64) -> String {
    rde_lab::grid::fmt17(x)
}

fn logistic_check(config: &ExperimentConfig, out: &mut Artifacts) -> Result<(), RunError> {
    let checks = identity_checks();
    for c in &checks {
        out.summary.push(format!(
            "{:<30} residual {:.3e} (tolerance {:.1e}) {}",
            c.name,
            c.residual,
            c.tolerance,
            if c.passed { "pass" } else { "FAIL" }
        ));
        if !c.passed {
            out.violate(
                &c.name,
                format!("residual {} exceeds {}", c.residual, c.tolerance),
            );
        }
    }
    match config.output.format {
        OutputFormat::Csv => out.csv("logistic-check.csv".into(), |buf| {
            let mut text = String::from("check,residual,tolerance,passed\n");
            for c in &checks {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    c.name,
                    fmt17(c.residual),
                    fmt17(c.tolerance),
                    c.passed
                ));
            }
            buf.extend_from_slice(text.as_bytes());
            Ok(())
        })?,
        OutputFormat::Json => out.json("logistic-check.json".into(), &checks),
    }
    Ok(())
}

#[derive(Serialize)]
struct Curve<'a> {
    n: usize,
    values: &'a [f64],
}

fn iterate_t(config: &ExperimentConfig, out: &mut Artifacts) -> Result<(), RunError> {
    let g = grid(config)?;
    let it = &config.iteration;
    let traj = iterate_to_fixed_point(
        TailFunction::logistic_tail_squared(g),
        it.max_iters,
        it.tolerance,
        RULE,
    )?;
    for w in traj.iterates.windows(2) {
        if !w[0].function.dominated_by(&w[1].function, ORDER_SLACK) {
            out.violate(
                "iterates_increasing",
                format!("f_{} is not below f_{}", w[0].index, w[1].index),
            );
        }
        if w[1].sup_distance_to_logistic_tail > w[0].sup_distance_to_logistic_tail + ORDER_SLACK {
            out.violate(
                "distance_to_fixed_point_non_increasing",
                format!("sup |f_n - H̄| grew at n = {}", w[1].index),
            );
        }
    }
    let summary = traj.summary();
    let last = traj.last();
    out.summary.push(format!(
        "{} iterations, sup |f_n - tail| = {:.6e}, converged_at = {:?}",
        last.index, last.sup_distance_to_logistic_tail, traj.converged_at
    ));
    let (every, stride) = (config.output.every, config.output.node_stride);
    match config.output.format {
        OutputFormat::Csv => {
            out.csv("iterate-t.csv".into(), |buf| {
                traj.write_csv_thinned(buf, every, stride)
            })?;
            out.json("iterate-t_summary.json".into(), &summary);
        }
        OutputFormat::Json => {
            let xs: Vec<f64> = g.xs().step_by(stride).collect();
            let n_last = traj.iterates.len() - 1;
            let values: Vec<Vec<f64>> = traj
                .iterates
                .iter()
                .enumerate()
                .filter(|(i, _)| i % every == 0 || *i == n_last)
                .map(|(_, it)| {
                    it.function
                        .values()
                        .iter()
                        .step_by(stride)
                        .copied()
                        .collect()
                })
                .collect();
            let kept: Vec<usize> = (0..=n_last)
                .filter(|i| i % every == 0 || *i == n_last)
                .collect();
            let curves: Vec<Curve> = kept
                .iter()
                .zip(&values)
                .map(|(n, v)| Curve { n: *n, values: v })
                .collect();
            out.json(
                "iterate-t.json".into(),
                &json!({"summary": summary, "x": xs, "iterates": curves}),
            );
        }
    }
    Ok(())
}

fn beta(config: &ExperimentConfig, out: &mut Artifacts) -> Result<(), RunError> {
    let it = &config.iteration;
    let seq = run_recursion(it.n_max, it.stop_tolerance, config.grid.resolution, RULE)?;
    if !seq.is_monotone(ORDER_SLACK) {
        out.violate(
            "beta_pointwise_monotone",
            "some β_{n+1} exceeds β_n at a node".into(),
        );
    }
    if let Some(n) = seq.values_at_zero.windows(2).position(|w| w[1] >= w[0]) {
        out.violate(
            "beta_at_zero_strictly_decreasing",
            format!("β_{}(0) >= β_{}(0)", n + 1, n),
        );
    }
    let rows = seq.summary();
    let last = rows.last().expect("sequence holds β_0");
    out.summary.push(format!(
        "{} curves, β_1(0) = {:.7}, β_{}(0) = {:.6e}, stopped_early = {}",
        rows.len(),
        seq.values_at_zero.get(1).copied().unwrap_or(f64::NAN),
        last.n,
        last.beta_n_at_zero,
        seq.stopped_early
    ));
    let summary = json!({
        "resolution": config.grid.resolution,
        "stop_tolerance": seq.stop_tolerance,
        "stopped_early": seq.stopped_early,
        "beta_n_at_zero": seq.values_at_zero,
        "rows": rows,
    });
    let (every, stride) = (config.output.every, config.output.node_stride);
    match config.output.format {
        OutputFormat::Csv => {
            out.csv("beta.csv".into(), |buf| {
                seq.write_csv_thinned(buf, every, stride)
            })?;
            out.json("beta_summary.json".into(), &summary);
        }
        OutputFormat::Json => {
            let n_last = seq.curves.len() - 1;
            let s: Vec<f64> = (0..=config.grid.resolution)
                .step_by(stride)
                .map(|k| seq.curves[0].node(k))
                .collect();
            let values: Vec<(usize, Vec<f64>)> = seq
                .curves
                .iter()
                .enumerate()
                .filter(|(i, _)| i % every == 0 || *i == n_last)
                .map(|(i, c)| (i, c.values().iter().step_by(stride).copied().collect()))
                .collect();
            let curves: Vec<Curve> = values
                .iter()
                .map(|(n, v)| Curve { n: *n, values: v })
                .collect();
            out.json(
                "beta.json".into(),
                &json!({"summary": summary, "s": s, "curves": curves}),
            );
        }
    }
    Ok(())
}

fn coupling(config: &ExperimentConfig, out: &mut Artifacts) -> Result<(), RunError> {
    let mc = &config.monte_carlo;
    let pwit = PwitConfig {
        depth: mc.depths[0],
        xi_cutoff: mc.xi_cutoff,
        boundary_law: mc.boundary,
        replicates: mc.replicates,
        master_seed: config.seed,
    };
    let (report, samples) = run_coupling_ladder(&pwit, &mc.depths)?;
    for r in &report.rows {
        if !(r.mean_abs_root_gap >= 0.0 && r.rms_root_gap >= 0.0) {
            out.violate("gaps_nonnegative", format!("depth {}", r.depth));
        }
        for ks in [
            r.ks_statistic_min_vs_logistic,
            r.ks_statistic_root_vs_logistic,
        ] {
            if !(0.0..=1.0).contains(&ks) {
                out.violate("ks_in_unit_interval", format!("depth {}: {ks}", r.depth));
            }
        }
        out.summary.push(format!(
            "depth {:>2}: gap {:.4} ± {:.4}, KS(min) {:.4}, KS(root) {:.4}, truncated {:.4}",
            r.depth,
            r.mean_abs_root_gap,
            r.gap_std_error,
            r.ks_statistic_min_vs_logistic,
            r.ks_statistic_root_vs_logistic,
            r.truncation_flag_rate
        ));
    }
    let paired: Vec<serde_json::Value> = samples
        .windows(2)
        .map(|w| {
            let z = paired_decrease_z(&w[0].gaps(), &w[1].gaps());
            json!({"from_depth": w[0].depth, "to_depth": w[1].depth, "z": z})
        })
        .collect();
    for p in &paired {
        out.summary.push(format!(
            "paired decrease {} -> {}: z = {:.2}",
            p["from_depth"],
            p["to_depth"],
            p["z"].as_f64().unwrap_or(f64::NAN)
        ));
    }
    match config.output.format {
        OutputFormat::Csv => {
            out.csv("coupling.csv".into(), |buf| report.write_csv(buf))?;
            out.json(
                "coupling_summary.json".into(),
                &json!({"report": &report, "paired_decrease": paired}),
            );
        }
        OutputFormat::Json => out.json(
            "coupling.json".into(),
            &json!({"report": &report, "paired_decrease": paired}),
        ),
    }
    Ok(())
}

fn assignment(config: &ExperimentConfig, out: &mut Artifacts) -> Result<(), RunError> {
    let mc = &config.monte_carlo;
    let law: CostLaw = mc.law;
    let mut rows = Vec::with_capacity(mc.n.len());
    let mut seeds = Vec::with_capacity(mc.n.len());
    for &n in &mc.n {
        let seed = derive_seed(config.seed, n as u64);
        let est = estimate_mean_objective(n, law, mc.replicates, seed)?;
        let row = BenchRow::new(n, law, &est);
        let band = 3.0 * row.std_error;
        out.summary.push(format!(
            "n = {:>4}: mean {:.6} ± {:.6} (3 SE band [{:.6}, {:.6}]), reference {:.6}, within 3 SE: {}",
            n,
            row.mean,
            row.std_error,
            row.mean - band,
            row.mean + band,
            row.parisi_value,
            if row.abs_gap <= band { "yes" } else { "no" }
        ));
        seeds.push(json!({"n": n, "seed": seed}));
        rows.push(row);
    }
    match config.output.format {
        OutputFormat::Csv => {
            out.csv("assignment.csv".into(), |buf| write_bench_csv(&rows, buf))?;
            out.json(
                "assignment_summary.json".into(),
                &json!({"law": law, "rows": &rows, "seeds": seeds}),
            );
        }
        OutputFormat::Json => out.json(
            "assignment.json".into(),
            &json!({"law": law, "rows": &rows, "seeds": seeds}),
        ),
    }
    Ok(())
}

fn identity_check(config: &ExperimentConfig, out: &mut Artifacts) -> Result<(), RunError> {
    let g = grid(config)?;
    let mut residuals = Vec::with_capacity(config.monte_carlo.identity_samples);
    for i in 0..config.monte_carlo.identity_samples {
        let mut rng = StdRng::seed_from_u64(derive_seed(config.seed, i as u64));
        let f = random_admissible_tail(g, &mut rng)?;
        residuals.push(identity_residual(&f, RULE)?);
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    out.summary.push(format!(
        "{} random tails, worst residual {:.3e} (tolerance {:.0e})",
        residuals.len(),
        worst,
        IDENTITY_TOLERANCE
    ));
    if worst.is_nan() || worst > IDENTITY_TOLERANCE {
        out.violate(
            "identity_equation",
            format!("worst residual {worst} exceeds {IDENTITY_TOLERANCE}"),
        );
    }
    match config.output.format {
        OutputFormat::Csv => out.csv("identity-check.csv".into(), |buf| {
            let mut text = String::from("sample,residual\n");
            for (i, r) in residuals.iter().enumerate() {
                text.push_str(&format!("{i},{}\n", fmt17(*r)));
            }
            buf.extend_from_slice(text.as_bytes());
            Ok(())
        })?,
        OutputFormat::Json => out.json(
            "identity-check.json".into(),
            &json!({"tolerance": IDENTITY_TOLERANCE, "residuals": residuals}),
        ),
    }
    Ok(())
}

use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rde_lab::assignment::CostLaw;
use rde_lab::pwit::BoundaryLaw;
use rde_lab_cli::{
    run, validate_config, Command, ConfigError, ExitCode, ExperimentConfig, Manifest, OutputFormat,
    RunError,
};

/// Experiments on the Logistic recursive distributional equation.
#[derive(Parser, Debug)]
#[command(name = "rde-lab", version, about)]
struct Cli {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true, conflicts_with = "replay")]
    config: Option<PathBuf>,
    /// Re-run the configuration recorded in a manifest.json.
    #[arg(long, global = true)]
    replay: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replicate-parallel experiments.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (default: config value, then $RDE_LAB_OUT_DIR, then ./rde-lab-out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    /// Half-width of the symmetric grid.
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct ThinArgs {
    /// Keep every k-th iterate in the long CSV.
    #[arg(long)]
    every: Option<usize>,
    /// Keep every k-th grid node in the long CSV.
    #[arg(long)]
    node_stride: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Numerical identities of the Logistic kernel.
    LogisticCheck,
    /// Iterate the operator T from the lower envelope.
    IterateT {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[command(flatten)]
        thin: ThinArgs,
    },
    /// The beta recursion on [0, 1].
    Beta {
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        stop_tolerance: Option<f64>,
        #[arg(long)]
        resolution: Option<usize>,
        #[command(flatten)]
        thin: ThinArgs,
    },
    /// Shared-innovation coupling on truncated Poisson weighted trees.
    Coupling {
        /// Comma-separated depth ladder.
        #[arg(long, value_delimiter = ',')]
        depths: Option<Vec<u32>>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        xi_cutoff: Option<f64>,
        /// `logistic`, `point_mass:V` or `uniform:A:B`.
        #[arg(long, value_parser = parse_boundary)]
        boundary: Option<BoundaryLaw>,
    },
    /// Random assignment benchmark against the Parisi sums.
    Assignment {
        /// Comma-separated matrix sizes.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long)]
        replicates: Option<usize>,
        /// `exponential_mean_n` or `uniform01`.
        #[arg(long, value_parser = parse_law)]
        law: Option<CostLaw>,
    },
    /// The product identity for random admissible tails.
    IdentityCheck {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn parse_boundary(s: &str) -> Result<BoundaryLaw, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match parts.as_slice() {
        ["logistic"] => Ok(BoundaryLaw::Logistic),
        ["point_mass", v] => Ok(BoundaryLaw::PointMass { value: num(v)? }),
        ["uniform", a, b] => Ok(BoundaryLaw::Uniform {
            low: num(a)?,
            high: num(b)?,
        }),
        _ => Err(format!(
            "expected logistic, point_mass:V or uniform:A:B, got `{s}`"
        )),
    }
}

fn parse_law(s: &str) -> Result<CostLaw, String> {
    s.parse().map_err(|e: rde_lab::Error| e.to_string())
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_grid(config: &mut ExperimentConfig, g: GridArgs) {
    set(&mut config.grid.x_max, g.x_max);
    set(&mut config.grid.step, g.step);
}

fn apply_thin(config: &mut ExperimentConfig, t: ThinArgs) {
    set(&mut config.output.every, t.every);
    set(&mut config.output.node_stride, t.node_stride);
}

fn build_config(cli: Cli) -> Result<(ExperimentConfig, Option<usize>), RunError> {
    let mut config = if let Some(path) = &cli.replay {
        Manifest::read(path)?.config
    } else if let Some(path) = &cli.config {
        let raw = std::fs::read_to_string(path).map_err(|e| RunError::Io {
            path: path.clone(),
            source: e,
        })?;
        validate_config(&raw)?
    } else {
        ExperimentConfig::default()
    };
    set(&mut config.seed, cli.seed);
    if let Some(dir) = cli.out_dir {
        config.output.dir = Some(dir);
    }
    if let Some(f) = cli.format {
        config.output.format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    if let Some(sub) = cli.command {
        match sub {
            Sub::LogisticCheck => config.command = Command::LogisticCheck,
            Sub::IterateT {
                grid,
                max_iters,
                tolerance,
                thin,
            } => {
                config.command = Command::IterateT;
                apply_grid(&mut config, grid);
                set(&mut config.iteration.max_iters, max_iters);
                set(&mut config.iteration.tolerance, tolerance);
                apply_thin(&mut config, thin);
            }
            Sub::Beta {
                n_max,
                stop_tolerance,
                resolution,
                thin,
            } => {
                config.command = Command::Beta;
                set(&mut config.iteration.n_max, n_max);
                set(&mut config.iteration.stop_tolerance, stop_tolerance);
                set(&mut config.grid.resolution, resolution);
                apply_thin(&mut config, thin);
            }
            Sub::Coupling {
                depths,
                replicates,
                xi_cutoff,
                boundary,
            } => {
                config.command = Command::Coupling;
                set(&mut config.monte_carlo.depths, depths);
                set(&mut config.monte_carlo.replicates, replicates);
                set(&mut config.monte_carlo.xi_cutoff, xi_cutoff);
                set(&mut config.monte_carlo.boundary, boundary);
            }
            Sub::Assignment { n, replicates, law } => {
                config.command = Command::Assignment;
                set(&mut config.monte_carlo.n, n);
                set(&mut config.monte_carlo.replicates, replicates);
                set(&mut config.monte_carlo.law, law);
            }
            Sub::IdentityCheck { grid, samples } => {
                config.command = Command::IdentityCheck;
                apply_grid(&mut config, grid);
                set(&mut config.monte_carlo.identity_samples, samples);
            }
        }
    }
    config.check()?;
    Ok((config, cli.workers))
}

fn fail(err: &RunError) -> ! {
    eprintln!("{}", err.record());
    process::exit(err.exit_code() as i32);
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            process::exit(0);
        }
        Err(e) => {
            let reason = e.to_string();
            let first = reason
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ")
                .to_string();
            eprint!("{e}");
            fail(&RunError::Config(ConfigError::new("<arguments>", first)));
        }
    };
    let (config, workers) = match build_config(cli) {
        Ok(v) => v,
        Err(e) => fail(&e),
    };
    match run(&config, workers) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            println!(
                "wrote {} file(s) and {} to {}",
                outcome.files.len(),
                rde_lab_cli::MANIFEST_FILE,
                outcome.out_dir.display()
            );
            process::exit(ExitCode::Success as i32);
        }
        Err(e) => fail(&e),
    }
}

//! Command-line runner for the rde-lab experiments.
//!
//! A run is described entirely by an [`ExperimentConfig`]. [`run`] executes
//! it, writes the result files and a `manifest.json` next to them, and maps
//! every failure onto one of the exit codes in [`ExitCode`].

pub mod config;
mod experiments;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use config::{validate_config, Command, ConfigError, ExperimentConfig, OutputFormat};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RDE_LAB_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "rde-lab-out";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Config = 2,
    Invariant = 3,
    Io = 4,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(ConfigError),
    #[error("invariant `{invariant}` violated: {detail}")]
    Invariant { invariant: String, detail: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            RunError::Config(_) => ExitCode::Config,
            RunError::Invariant { .. } => ExitCode::Invariant,
            RunError::Io { .. } => ExitCode::Io,
        }
    }

    /// One-line JSON error record for stderr.
    pub fn record(&self) -> serde_json::Value {
        let mut rec = json!({
            "status": "error",
            "exit_code": self.exit_code() as i32,
            "message": self.to_string(),
        });
        let extra = match self {
            RunError::Config(e) => json!({"kind": "config", "field": e.field, "reason": e.reason}),
            RunError::Invariant { invariant, detail } => {
                json!({"kind": "invariant", "invariant": invariant, "detail": detail})
            }
            RunError::Io { path, source } => {
                json!({"kind": "io", "path": path, "reason": source.to_string()})
            }
        };
        rec.as_object_mut()
            .unwrap()
            .extend(extra.as_object().unwrap().clone());
        rec
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<rde_lab::Error> for RunError {
    fn from(e: rde_lab::Error) -> Self {
        use rde_lab::Error as E;
        match e {
            E::InvalidArgument(reason) | E::InvalidGrid(reason) => {
                RunError::Config(ConfigError::new("<config>", reason))
            }
            E::Io(source) => RunError::io("<output>", source),
            E::EnvelopeViolation { .. } => RunError::Invariant {
                invariant: "envelope".into(),
                detail: e.to_string(),
            },
            E::NodeLimit { .. } => RunError::Invariant {
                invariant: "node_limit".into(),
                detail: e.to_string(),
            },
            other => RunError::Invariant {
                invariant: "numerical".into(),
                detail: other.to_string(),
            },
        }
    }
}

/// Everything needed to replay a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub workers: usize,
    pub wall_time_seconds: f64,
    pub files: Vec<String>,
    pub status: String,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            RunError::Config(ConfigError::new(
                format!("manifest.{}", e.path()),
                e.inner().to_string(),
            ))
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: Manifest,
    /// Human-readable result lines.
    pub summary: Vec<String>,
}

/// Output directory: the configured one, else `$RDE_LAB_OUT_DIR`, else
/// `rde-lab-out`.
pub fn resolve_out_dir(config: &ExperimentConfig) -> PathBuf {
    config
        .output
        .dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Runs `config` on a pool of `workers` threads (the global pool if `None`).
pub fn run(config: &ExperimentConfig, workers: Option<usize>) -> Result<RunOutcome, RunError> {
    config.check()?;
    match workers {
        Some(0) => Err(ConfigError::new("--workers", "must be at least 1").into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| ConfigError::new("--workers", e.to_string()))?;
            pool.install(|| run_in_pool(config, n))
        }
        None => run_in_pool(config, rayon::current_num_threads()),
    }
}

fn run_in_pool(config: &ExperimentConfig, workers: usize) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    let artifacts = experiments::execute(config)?;
    let wall = started.elapsed().as_secs_f64();

    let out_dir = resolve_out_dir(config);
    fs::create_dir_all(&out_dir).map_err(|e| RunError::io(&out_dir, e))?;
    let mut files = Vec::new();
    for (name, bytes) in &artifacts.files {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| RunError::io(&path, e))?;
        files.push(path);
    }
    let manifest = Manifest {
        tool: "rde-lab".into(),
        version: rde_lab::VERSION.into(),
        command: config.command,
        seed: config.seed,
        config: config.clone(),
        workers,
        wall_time_seconds: wall,
        files: artifacts.files.iter().map(|(n, _)| n.clone()).collect(),
        status: if artifacts.violation.is_some() {
            "invariant_failure"
        } else {
            "ok"
        }
        .into(),
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&manifest_path, text).map_err(|e| RunError::io(&manifest_path, e))?;

    if let Some((invariant, detail)) = artifacts.violation {
        return Err(RunError::Invariant { invariant, detail });
    }
    Ok(RunOutcome {
        out_dir,
        files,
        manifest,
        summary: artifacts.summary,
    })
}

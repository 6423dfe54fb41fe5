//! Experiment configuration: parsing, defaults, range checks and the
//! canonical JSON form.

use std::fmt;
use std::path::PathBuf;

use rde_lab::assignment::CostLaw;
use rde_lab::pwit::{BoundaryLaw, MAX_DEPTH, MIN_XI_CUTOFF};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    LogisticCheck,
    IterateT,
    Beta,
    Coupling,
    Assignment,
    IdentityCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::LogisticCheck => "logistic-check",
            Command::IterateT => "iterate-t",
            Command::Beta => "beta",
            Command::Coupling => "coupling",
            Command::Assignment => "assignment",
            Command::IdentityCheck => "identity-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Half-width of the symmetric x grid.
    pub x_max: f64,
    pub step: f64,
    /// Number of cells on `[0, 1]` for the beta recursion.
    pub resolution: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_max: 40.0,
            step: 0.01,
            resolution: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterationConfig {
    /// Applications of `T` for `iterate-t`.
    pub max_iters: usize,
    /// Sup-norm step below which `iterate-t` stops.
    pub tolerance: f64,
    /// Largest beta index computed.
    pub n_max: usize,
    /// Sup-norm step below which the beta recursion stops.
    pub stop_tolerance: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tolerance: 1e-6,
            n_max: 50,
            stop_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub depths: Vec<u32>,
    pub replicates: usize,
    pub xi_cutoff: f64,
    pub boundary: BoundaryLaw,
    /// Matrix sizes for `assignment`.
    pub n: Vec<usize>,
    pub law: CostLaw,
    /// Random tails drawn by `identity-check`.
    pub identity_samples: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            depths: vec![0, 2, 4, 6, 8, 10],
            replicates: 10_000,
            xi_cutoff: 30.0,
            boundary: BoundaryLaw::Logistic,
            n: vec![1, 2, 3, 5, 10, 50, 100],
            law: CostLaw::ExponentialMeanN,
            identity_samples: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub format: OutputFormat,
    /// Output directory; falls back to `$RDE_LAB_OUT_DIR`, then `rde-lab-out`.
    pub dir: Option<PathBuf>,
    /// Keep every `every`-th iterate or curve in long CSVs.
    pub every: usize,
    /// Keep every `node_stride`-th grid node in long CSVs.
    pub node_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            format: OutputFormat::Csv,
            dir: None,
            every: 1,
            node_stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub grid: GridConfig,
    pub iteration: IterationConfig,
    pub monte_carlo: MonteCarloConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: Command::default(),
            seed: 0x5eed,
            grid: GridConfig::default(),
            iteration: IterationConfig::default(),
            monte_carlo: MonteCarloConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// A rejected configuration: where, and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

/// Largest matrix size accepted by `assignment`.
pub const MAX_ASSIGNMENT_N: usize = 2000;

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

impl ExperimentConfig {
    /// Range checks mirroring the guards of the library.
    pub fn check(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        positive("grid.x_max", g.x_max)?;
        positive("grid.step", g.step)?;
        let cells = g.x_max / g.step;
        if (cells - cells.round()).abs() > 1e-6 * cells.max(1.0) {
            return Err(ConfigError::new(
                "grid.step",
                format!("must divide x_max = {} into whole cells", g.x_max),
            ));
        }
        if cells.round() > 5e6 {
            return Err(ConfigError::new(
                "grid.step",
                "grid would exceed 10^7 nodes",
            ));
        }
        if g.resolution < 2 || g.resolution > 10_000_000 {
            return Err(ConfigError::new(
                "grid.resolution",
                format!("must lie in [2, 10^7], got {}", g.resolution),
            ));
        }
        let it = &self.iteration;
        if it.max_iters == 0 {
            return Err(ConfigError::new(
                "iteration.max_iters",
                "must be at least 1",
            ));
        }
        positive("iteration.tolerance", it.tolerance)?;
        if it.n_max == 0 {
            return Err(ConfigError::new("iteration.n_max", "must be at least 1"));
        }
        if !(it.stop_tolerance >= 0.0 && it.stop_tolerance.is_finite()) {
            return Err(ConfigError::new(
                "iteration.stop_tolerance",
                "must be nonnegative and finite",
            ));
        }
        let mc = &self.monte_carlo;
        if mc.depths.is_empty() {
            return Err(ConfigError::new("monte_carlo.depths", "must not be empty"));
        }
        for (i, d) in mc.depths.iter().enumerate() {
            if *d > MAX_DEPTH {
                return Err(ConfigError::new(
                    format!("monte_carlo.depths[{i}]"),
                    format!("depth {d} exceeds the guard of {MAX_DEPTH}"),
                ));
            }
        }
        if mc.replicates < 2 {
            return Err(ConfigError::new(
                "monte_carlo.replicates",
                "must be at least 2",
            ));
        }
        if !(mc.xi_cutoff.is_finite() && mc.xi_cutoff >= MIN_XI_CUTOFF) {
            return Err(ConfigError::new(
                "monte_carlo.xi_cutoff",
                format!(
                    "must be finite and at least {MIN_XI_CUTOFF}, got {}",
                    mc.xi_cutoff
                ),
            ));
        }
        match mc.boundary {
            BoundaryLaw::Logistic => {}
            BoundaryLaw::PointMass { value } if value.is_finite() => {}
            BoundaryLaw::Uniform { low, high }
                if low.is_finite() && high.is_finite() && low < high => {}
            other => {
                return Err(ConfigError::new(
                    "monte_carlo.boundary",
                    format!("invalid boundary law {other:?}"),
                ))
            }
        }
        if mc.n.is_empty() {
            return Err(ConfigError::new("monte_carlo.n", "must not be empty"));
        }
        for (i, n) in mc.n.iter().enumerate() {
            if *n == 0 || *n > MAX_ASSIGNMENT_N {
                return Err(ConfigError::new(
                    format!("monte_carlo.n[{i}]"),
                    format!("must lie in [1, {MAX_ASSIGNMENT_N}], got {n}"),
                ));
            }
        }
        if mc.identity_samples == 0 {
            return Err(ConfigError::new(
                "monte_carlo.identity_samples",
                "must be at least 1",
            ));
        }
        if self.output.every == 0 {
            return Err(ConfigError::new("output.every", "must be at least 1"));
        }
        if self.output.node_stride == 0 {
            return Err(ConfigError::new("output.node_stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Pretty-printed JSON with fields in declaration order.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses a JSON config, fills in defaults and checks ranges. Blank input
/// yields the default configuration.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, ConfigError> {
    let config = if raw.trim().is_empty() {
        ExperimentConfig::default()
    } else {
        let de = &mut serde_json::Deserializer::from_str(raw);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." {
                "<root>".to_string()
            } else {
                path
            };
            ConfigError::new(field, e.into_inner().to_string())
        })?
    };
    config.check()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_gives_defaults() {
        assert_eq!(validate_config("").unwrap(), ExperimentConfig::default());
        assert_eq!(
            validate_config("  {}  ").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn depth_guard() {
        let e = validate_config(r#"{"monte_carlo": {"depths": [2, 99]}}"#).unwrap_err();
        assert_eq!(e.field, "monte_carlo.depths[1]");
    }

    #[test]
    fn unknown_field_names_its_path() {
        let e = validate_config(r#"{"grid": {"x_maxx": 3}}"#).unwrap_err();
        assert!(e.field.starts_with("grid"), "{e}");
        assert!(e.reason.contains("x_maxx"), "{e}");
    }

    #[test]
    fn canonical_round_trip() {
        let c = validate_config(r#"{"command": "coupling", "seed": 7, "monte_carlo": {"boundary": {"kind": "uniform", "low": -1, "high": 2}}}"#).unwrap();
        let text = c.to_canonical_json();
        let back = validate_config(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_canonical_json(), text);
    }

    #[test]
    fn step_must_tile_the_grid() {
        assert!(validate_config(r#"{"grid": {"step": 0.03}}"#).is_err());
        assert!(validate_config(r#"{"grid": {"x_max": 10, "step": 0.05}}"#).is_ok());
    }
}

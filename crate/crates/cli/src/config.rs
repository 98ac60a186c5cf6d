//! TOML experiment configuration: parsing, validation, and conversion
//! into the core model types.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use bandfloor::potential::TrigTerm;
use bandfloor::{build_single_site, Bump, ModelFamily, PeriodicBackground};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("TOML parse error in {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackgroundTermConfig {
    pub amplitude: f64,
    pub harmonics: Vec<i32>,
    #[serde(default)]
    pub sine: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BackgroundConfig {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub terms: Vec<BackgroundTermConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BumpConfig {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dimension: usize,
    pub points_per_unit: usize,
    pub omega_minus: f64,
    pub omega_plus: f64,
    #[serde(default)]
    pub background: BackgroundConfig,
    pub site: Vec<BumpConfig>,
}

fn default_n_bands() -> usize {
    4
}
fn default_refine_tol() -> f64 {
    1e-6
}
fn default_max_period() -> usize {
    3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Brillouin-zone samples per axis; default 129 (d=1) / 33 (d=2).
    pub n_theta: Option<usize>,
    #[serde(default = "default_n_bands")]
    pub n_bands: usize,
    pub lambda_ladder: Vec<f64>,
    /// Disorder alphabet; default {ω⁻, midpoint, ω⁺}.
    pub alphabet: Option<Vec<f64>>,
    #[serde(default = "default_max_period")]
    pub max_period: usize,
    #[serde(default = "default_refine_tol")]
    pub refine_tol: f64,
}

fn default_true() -> bool {
    true
}
fn default_seed() -> u64 {
    42
}
fn default_projection_samples() -> usize {
    10
}
fn default_box_samples() -> usize {
    50
}
fn default_gap_threshold() -> f64 {
    1e-6
}
fn default_singular_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Evaluation coupling for bands/minima/verification. When absent,
    /// 0.25 × the λ₀ estimate from the coupling stage is used.
    pub lambda: Option<f64>,
    #[serde(default = "default_true")]
    pub min_location: bool,
    #[serde(default)]
    pub monotone: bool,
    #[serde(default)]
    pub projection: bool,
    #[serde(default = "default_projection_samples")]
    pub projection_samples: usize,
    #[serde(default)]
    pub box_sampling: bool,
    #[serde(default)]
    pub box_dims: Vec<usize>,
    #[serde(default = "default_box_samples")]
    pub box_samples: usize,
    #[serde(default = "default_gap_threshold")]
    pub gap_threshold: f64,
    #[serde(default = "default_singular_tol")]
    pub singular_tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

fn default_formats() -> Vec<String> {
    ["csv", "json", "svg", "md"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputConfig {
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub model: ModelConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub check: CheckConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn load(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_string(),
            source,
        })?;
        let config: ExperimentConfig =
            toml::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.to_string(),
                source,
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid(
                "schema",
                format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema),
            ));
        }
        if !matches!(self.model.dimension, 1 | 2) {
            return Err(invalid("model.dimension", "must be 1 or 2"));
        }
        if self.model.omega_minus >= self.model.omega_plus {
            return Err(invalid(
                "model.omega_minus",
                "omega_minus must be strictly below omega_plus",
            ));
        }
        for (i, b) in self.model.site.iter().enumerate() {
            if b.center.len() != self.model.dimension {
                return Err(invalid(
                    &format!("model.site[{i}].center"),
                    format!("expected {} coordinates", self.model.dimension),
                ));
            }
            if b.radius <= 0.0 {
                return Err(invalid(&format!("model.site[{i}].radius"), "must be positive"));
            }
        }
        let ladder = &self.sweep.lambda_ladder;
        if ladder.is_empty() || ladder[0] != 0.0 || ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(
                "sweep.lambda_ladder",
                "must be ascending and start at 0",
            ));
        }
        if self.sweep.refine_tol <= 0.0 {
            return Err(invalid("sweep.refine_tol", "must be positive"));
        }
        if self.sweep.n_bands == 0 {
            return Err(invalid("sweep.n_bands", "must be at least 1"));
        }
        if let Some(n_theta) = self.sweep.n_theta {
            if n_theta < 8 {
                return Err(invalid("sweep.n_theta", "must be at least 8"));
            }
        }
        if let Some(alphabet) = &self.sweep.alphabet {
            let (lo, hi) = (self.model.omega_minus, self.model.omega_plus);
            if !alphabet.contains(&lo) || !alphabet.contains(&hi) {
                return Err(invalid(
                    "sweep.alphabet",
                    "must contain both omega_minus and omega_plus",
                ));
            }
            if alphabet.iter().any(|&v| v < lo || v > hi) {
                return Err(invalid("sweep.alphabet", "values must lie within the bounds"));
            }
        }
        if let Some(lambda) = self.check.lambda {
            if lambda < 0.0 {
                return Err(invalid("check.lambda", "must be nonnegative"));
            }
        }
        if self.check.gap_threshold <= 0.0 {
            return Err(invalid("check.gap_threshold", "must be positive"));
        }
        if self.check.singular_tol <= 0.0 {
            return Err(invalid("check.singular_tol", "must be positive"));
        }
        if self.check.box_sampling {
            if self.check.box_dims.len() != self.model.dimension {
                return Err(invalid(
                    "check.box_dims",
                    "must give one box length per dimension",
                ));
            }
            if self.check.box_dims.iter().any(|&l| l == 0) {
                return Err(invalid("check.box_dims", "box lengths must be positive"));
            }
        }
        if self.output.directory.is_empty() {
            return Err(invalid("output.directory", "must not be empty"));
        }
        for f in &self.output.formats {
            if !matches!(f.as_str(), "csv" | "json" | "svg" | "md") {
                return Err(invalid(
                    "output.formats",
                    format!("unknown format `{f}` (expected csv/json/svg/md)"),
                ));
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Result<ModelFamily, ConfigError> {
        let background = PeriodicBackground::new(
            self.model.dimension,
            self.model.background.offset,
            self.model
                .background
                .terms
                .iter()
                .map(|t| TrigTerm {
                    amplitude: t.amplitude,
                    harmonics: t.harmonics.clone(),
                    sine: t.sine,
                })
                .collect(),
        )
        .map_err(|e| invalid("model.background", e.to_string()))?;
        let site = build_single_site(
            self.model
                .site
                .iter()
                .map(|b| Bump {
                    center: b.center.clone(),
                    radius: b.radius,
                    amplitude: b.amplitude,
                })
                .collect(),
            self.model.dimension,
        )
        .map_err(|e| invalid("model.site", e.to_string()))?;
        ModelFamily::new(
            self.model.dimension,
            self.model.points_per_unit,
            background,
            site,
            (self.model.omega_minus, self.model.omega_plus),
        )
        .map_err(|e| invalid("model", e.to_string()))
    }

    pub fn n_theta(&self) -> usize {
        self.sweep
            .n_theta
            .unwrap_or_else(|| bandfloor::default_n_theta(self.model.dimension))
    }

    pub fn alphabet(&self) -> Vec<f64> {
        self.sweep.alphabet.clone().unwrap_or_else(|| {
            let (lo, hi) = (self.model.omega_minus, self.model.omega_plus);
            vec![lo, 0.5 * (lo + hi), hi]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const MINIMAL: &str = r#"
schema = 1

[model]
dimension = 1
points_per_unit = 16
omega_minus = 0.0
omega_plus = 1.0

[[model.site]]
center = [0.0]
radius = 0.2
amplitude = 1.0

[sweep]
lambda_ladder = [0.0, 0.1]

[output]
directory = "out"
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        config.validate().unwrap();
        assert_eq!(config.n_theta(), 129);
        assert_eq!(config.alphabet(), vec![0.0, 0.5, 1.0]);
        assert_eq!(config.sweep.n_bands, 4);
        assert_eq!(config.check.seed, 42);
        config.family().unwrap();
    }

    #[test]
    fn bad_ladder_names_field() {
        let text = MINIMAL.replace("[0.0, 0.1]", "[0.1, 0.2]");
        let config: ExperimentConfig = toml::from_str(&text).unwrap();
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("sweep.lambda_ladder"), "{err}");
    }

    #[test]
    fn bump_touching_boundary_names_site() {
        let text = MINIMAL.replace("radius = 0.2", "radius = 0.55");
        let config: ExperimentConfig = toml::from_str(&text).unwrap();
        config.validate().unwrap();
        let err = config.family().unwrap_err();
        assert!(err.to_string().contains("model.site"), "{err}");
    }
}

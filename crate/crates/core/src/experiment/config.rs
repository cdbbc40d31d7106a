use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::analysis::SubclassifierMode;
use crate::mlp::{Loss, SubnetObjective};

fn default_out() -> PathBuf {
    PathBuf::from("runs/default")
}

/// A full run description. Unknown keys are rejected at every level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Where outputs go. Not serialized, so reports do not depend on it.
    #[serde(default = "default_out", skip_serializing)]
    pub out: PathBuf,
    pub data: DataSection,
    #[serde(default)]
    pub boost: BoostSection,
    #[serde(default)]
    pub mlp: MlpSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub source: DataSource,
    /// Used when the source has no separate test files.
    #[serde(default = "DataSection::default_train_fraction")]
    pub train_fraction: f64,
    /// Standardize features with training-set statistics.
    #[serde(default)]
    pub standardize: bool,
}

impl DataSection {
    fn default_train_fraction() -> f64 {
        0.8
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    XorClusters {
        n: usize,
        d: usize,
        cluster_separation: f64,
        cluster_stddev: f64,
        #[serde(default)]
        label_noise: f64,
    },
    Sinusoid {
        n: usize,
        d: usize,
        signal_dims: usize,
        frequency: f64,
        #[serde(default)]
        label_noise: f64,
    },
    Cifar10 {
        files: Vec<PathBuf>,
        #[serde(default)]
        test_files: Vec<PathBuf>,
        /// Classes labelled +1; default 0..=4.
        #[serde(default)]
        positive_classes: Option<Vec<u8>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoostSection {
    pub rounds: usize,
}

impl Default for BoostSection {
    fn default() -> Self {
        Self { rounds: 6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Phase `i` samples from the Adaboost round-`i` distribution.
    BoostingAligned,
    /// Same phase boundaries, uniform sampling throughout.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpSection {
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub loss: Loss,
    pub schedule: ScheduleMode,
    /// Number of schedule phases; defaults to the number of boosting rounds.
    pub phases: Option<usize>,
    pub steps_per_phase: usize,
    pub checkpoint_every: usize,
    pub freeze_output: bool,
    /// Sub-network training: number of disjoint unit blocks.
    pub subnetworks: usize,
    pub overlap_cap: usize,
    pub subnet_objective: SubnetObjective,
    /// Sub-network training length in SGD steps.
    pub subnet_steps: usize,
}

impl Default for MlpSection {
    fn default() -> Self {
        Self {
            hidden: 64,
            learning_rate: 0.01,
            batch_size: 16,
            loss: Loss::Hinge,
            schedule: ScheduleMode::BoostingAligned,
            phases: None,
            steps_per_phase: 200,
            checkpoint_every: 5,
            freeze_output: false,
            subnetworks: 4,
            overlap_cap: 0,
            subnet_objective: SubnetObjective::Full,
            subnet_steps: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// CMI level reported as "≈ 0", in bits.
    pub threshold: f64,
    pub trials: usize,
    pub bins: usize,
    pub smoothing: f64,
    /// Phases `J` to select; defaults to `min(schedule phases, rounds − 1)`.
    pub phases: Option<usize>,
    pub rematch: bool,
    pub mode: SubclassifierMode,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            threshold: 0.05,
            trials: 200,
            bins: crate::analysis::DEFAULT_BINS,
            smoothing: crate::info::DEFAULT_SMOOTHING,
            phases: None,
            rematch: false,
            mode: SubclassifierMode::Subnetwork,
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML or JSON (by extension, `.json` is JSON and anything else
    /// TOML) and validates. Errors name the offending key.
    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let json = path.extension().is_some_and(|e| e == "json");
        let cfg = if json {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
        .map_err(|e| match e {
            ExperimentError::Config(m) => {
                ExperimentError::Config(format!("{}: {m}", path.display()))
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let de =
            toml::Deserializer::parse(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(path_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(&mut de).map_err(path_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Semantic checks; messages start with the dotted key.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |key: &str, msg: String| Err(ExperimentError::Config(format!("{key}: {msg}")));
        let d = &self.data;
        if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
            return bad(
                "data.train_fraction",
                format!("must be in (0, 1), got {}", d.train_fraction),
            );
        }
        match &d.source {
            DataSource::XorClusters {
                n,
                d,
                cluster_separation,
                cluster_stddev,
                label_noise,
            } => {
                let c = crate::data::XorClusterConfig {
                    n: *n,
                    d: *d,
                    cluster_separation: *cluster_separation,
                    cluster_stddev: *cluster_stddev,
                    label_noise: *label_noise,
                    seed: 0,
                };
                c.validate()
                    .or_else(|e| bad("data.source", e.to_string()))?;
            }
            DataSource::Sinusoid {
                n,
                d,
                signal_dims,
                frequency,
                label_noise,
            } => {
                let c = crate::data::SinusoidConfig {
                    n: *n,
                    d: *d,
                    signal_dims: *signal_dims,
                    frequency: *frequency,
                    label_noise: *label_noise,
                    seed: 0,
                };
                c.validate()
                    .or_else(|e| bad("data.source", e.to_string()))?;
            }
            DataSource::Cifar10 {
                files,
                positive_classes,
                ..
            } => {
                if files.is_empty() {
                    return bad(
                        "data.source.files",
                        "must list at least one batch file".into(),
                    );
                }
                if let Some(p) = positive_classes {
                    if p.is_empty() || p.iter().any(|&c| c > 9) {
                        return bad(
                            "data.source.positive_classes",
                            format!("must be a non-empty subset of 0..=9, got {p:?}"),
                        );
                    }
                }
            }
        }
        if self.boost.rounds == 0 {
            return bad("boost.rounds", "must be >= 1".into());
        }
        let m = &self.mlp;
        if m.hidden == 0 {
            return bad("mlp.hidden", "must be >= 1".into());
        }
        if !(m.learning_rate.is_finite() && m.learning_rate >= 0.0) {
            return bad(
                "mlp.learning_rate",
                format!("must be finite and >= 0, got {}", m.learning_rate),
            );
        }
        if m.batch_size == 0 {
            return bad("mlp.batch_size", "must be >= 1".into());
        }
        if m.steps_per_phase == 0 {
            return bad("mlp.steps_per_phase", "must be >= 1".into());
        }
        if m.checkpoint_every == 0 {
            return bad("mlp.checkpoint_every", "must be >= 1".into());
        }
        if m.subnet_steps == 0 {
            return bad("mlp.subnet_steps", "must be >= 1".into());
        }
        let phases = self.schedule_phases();
        if phases == 0 || phases > self.boost.rounds {
            return bad(
                "mlp.phases",
                format!(
                    "must be in 1..={} (boost.rounds), got {phases}",
                    self.boost.rounds
                ),
            );
        }
        if m.subnetworks == 0 || m.subnetworks > m.hidden || m.subnetworks > self.boost.rounds {
            return bad(
                "mlp.subnetworks",
                format!(
                    "must be in 1..=min(mlp.hidden, boost.rounds) = {}, got {}",
                    m.hidden.min(self.boost.rounds),
                    m.subnetworks
                ),
            );
        }
        let a = &self.analysis;
        if !(a.threshold.is_finite() && a.threshold >= 0.0) {
            return bad(
                "analysis.threshold",
                format!("must be finite and >= 0, got {}", a.threshold),
            );
        }
        if a.trials < crate::info::MIN_SIGNIFICANCE_TRIALS {
            return bad(
                "analysis.trials",
                format!(
                    "must be >= {}, got {}",
                    crate::info::MIN_SIGNIFICANCE_TRIALS,
                    a.trials
                ),
            );
        }
        if a.bins == 0 {
            return bad("analysis.bins", "must be >= 1".into());
        }
        if !(a.smoothing.is_finite() && a.smoothing > 0.0) {
            return bad(
                "analysis.smoothing",
                format!("must be finite and > 0, got {}", a.smoothing),
            );
        }
        if let Some(j) = a.phases {
            if j == 0 || j + 1 > self.boost.rounds {
                return bad(
                    "analysis.phases",
                    format!(
                        "must be in 1..={} (boost.rounds − 1), got {j}",
                        self.boost.rounds.saturating_sub(1)
                    ),
                );
            }
        }
        Ok(())
    }

    pub fn schedule_phases(&self) -> usize {
        self.mlp.phases.unwrap_or(self.boost.rounds)
    }
}

fn path_error<E: std::fmt::Display>(e: serde_path_to_error::Error<E>) -> ExperimentError {
    let path = e.path().to_string();
    let inner = e.inner().to_string();
    // toml errors carry a source excerpt between the position and the message.
    let lines: Vec<&str> = inner
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let inner = match lines.as_slice() {
        [] => String::new(),
        [only] => only.to_string(),
        [first, .., last] => format!("{last} ({})", first.to_lowercase()),
    };
    if path == "." || path.is_empty() {
        ExperimentError::Config(inner)
    } else {
        ExperimentError::Config(format!("{path}: {inner}"))
    }
}

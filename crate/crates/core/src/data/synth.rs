//! Synthetic distributions: high-dimensional sinusoid and xor clusters.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{DataError, Dataset, DatasetMeta};
use crate::rng::rng_from_seed;
use crate::{sign, Label};

/// Gaussian inputs labelled by `sign(sin(ω·⟨u, x_signal⟩))`, flipped with
/// probability `label_noise`.
///
/// `u` is the normalized all-ones direction over the first `signal_dims`
/// coordinates; the remaining coordinates are pure noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidConfig {
    pub n: usize,
    pub d: usize,
    pub signal_dims: usize,
    pub frequency: f64,
    pub label_noise: f64,
    pub seed: u64,
}

impl SinusoidConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.d == 0 {
            return bad("d must be >= 1".into());
        }
        if self.signal_dims == 0 || self.signal_dims > self.d {
            return bad(format!(
                "signal_dims must be in 1..={}, got {}",
                self.d, self.signal_dims
            ));
        }
        if !self.frequency.is_finite() || self.frequency <= 0.0 {
            return bad(format!(
                "frequency must be finite and > 0, got {}",
                self.frequency
            ));
        }
        check_noise(self.label_noise)
    }
}

/// Four isotropic Gaussian clusters at `±μ1` (label +1) and `±μ2` (label −1),
/// with `μ1 = s·e_0`, `μ2 = s·e_1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XorClusterConfig {
    pub n: usize,
    pub d: usize,
    pub cluster_separation: f64,
    pub cluster_stddev: f64,
    pub label_noise: f64,
    pub seed: u64,
}

impl XorClusterConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.d < 2 {
            return bad(format!(
                "d must be >= 2 for two orthogonal means, got {}",
                self.d
            ));
        }
        if !(self.cluster_separation.is_finite() && self.cluster_separation > 0.0) {
            return bad(format!(
                "cluster_separation must be > 0, got {}",
                self.cluster_separation
            ));
        }
        if !(self.cluster_stddev.is_finite() && self.cluster_stddev > 0.0) {
            return bad(format!(
                "cluster_stddev must be > 0, got {}",
                self.cluster_stddev
            ));
        }
        check_noise(self.label_noise)
    }
}

fn check_noise(eta: f64) -> Result<(), DataError> {
    if !(0.0..0.5).contains(&eta) {
        return Err(DataError::InvalidConfig(format!(
            "label_noise must be in [0, 0.5), got {eta}"
        )));
    }
    Ok(())
}

/// Noise-free sinusoid label of one input.
pub fn sinusoid_clean_label(config: &SinusoidConfig, x: &[f64]) -> Label {
    let s = config.signal_dims;
    let proj = x[..s].iter().sum::<f64>() / (s as f64).sqrt();
    sign((config.frequency * proj).sin())
}

pub fn gen_sinusoid(config: &SinusoidConfig) -> Result<Dataset, DataError> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let mut features = Vec::with_capacity(config.n * config.d);
    let mut labels = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let start = features.len();
        features.extend((0..config.d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let clean = sinusoid_clean_label(config, &features[start..]);
        let flip = rng.random::<f64>() < config.label_noise;
        labels.push(if flip { -clean } else { clean });
    }
    let mut meta = DatasetMeta::new("sinusoid");
    meta.seed = Some(config.seed);
    meta.params = [
        ("n", json!(config.n)),
        ("d", json!(config.d)),
        ("signal_dims", json!(config.signal_dims)),
        ("frequency", json!(config.frequency)),
        ("label_noise", json!(config.label_noise)),
        ("direction", json!("uniform over signal dims")),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    Dataset::new(features, config.d, labels, meta)
}

/// The four cluster means with their clean labels, in sampling order.
pub fn xor_cluster_means(config: &XorClusterConfig) -> [(Vec<f64>, Label); 4] {
    let s = config.cluster_separation;
    let axis = |j: usize, v: f64| {
        let mut m = vec![0.0; config.d];
        m[j] = v;
        m
    };
    [
        (axis(0, s), 1),
        (axis(0, -s), 1),
        (axis(1, s), -1),
        (axis(1, -s), -1),
    ]
}

pub fn gen_xor_clusters(config: &XorClusterConfig) -> Result<Dataset, DataError> {
    config.validate()?;
    let means = xor_cluster_means(config);
    let mut rng = rng_from_seed(config.seed);
    let mut features = Vec::with_capacity(config.n * config.d);
    let mut labels = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let (mean, clean) = &means[rng.random_range(0..4)];
        features.extend(
            mean.iter()
                .map(|m| m + config.cluster_stddev * rng.sample::<f64, _>(StandardNormal)),
        );
        let flip = rng.random::<f64>() < config.label_noise;
        labels.push(if flip { -clean } else { *clean });
    }
    let mut meta = DatasetMeta::new("xor_clusters");
    meta.seed = Some(config.seed);
    meta.params = [
        ("n", json!(config.n)),
        ("d", json!(config.d)),
        ("cluster_separation", json!(config.cluster_separation)),
        ("cluster_stddev", json!(config.cluster_stddev)),
        ("label_noise", json!(config.label_noise)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    Dataset::new(features, config.d, labels, meta)
}

//! Datasets: construction, validation, splitting and standardization.

mod cifar;
mod io;
mod synth;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng_from_seed;
use crate::Label;

pub use cifar::{
    load_cifar10_binary, parse_cifar10_records, records_to_dataset, serialize_cifar10_records,
    CifarRecord, ClassPartition, CIFAR_IMAGE_BYTES, CIFAR_RECORD_BYTES,
};
pub use io::{read_dataset, write_dataset};
pub use synth::{
    gen_sinusoid, gen_xor_clusters, sinusoid_clean_label, xor_cluster_means, SinusoidConfig,
    XorClusterConfig,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("corrupt record {record}: label byte {label} > 9")]
    CorruptLabel { record: usize, label: u8 },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Where a dataset came from: generator name, seed, parameters, and the
/// chain of transformations applied since.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub source: String,
    pub seed: Option<u64>,
    pub params: BTreeMap<String, serde_json::Value>,
    pub lineage: Vec<String>,
}

impl DatasetMeta {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            ..Self::default()
        }
    }

    fn derived(&self, step: String) -> Self {
        let mut meta = self.clone();
        meta.lineage.push(step);
        meta
    }
}

/// Row-major feature matrix with ±1 labels and an optional example
/// distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    features: Vec<f64>,
    labels: Vec<Label>,
    weights: Option<Vec<f64>>,
    meta: DatasetMeta,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        d: usize,
        labels: Vec<Label>,
        meta: DatasetMeta,
    ) -> Result<Self, DataError> {
        let n = labels.len();
        if n == 0 || d == 0 {
            return Err(DataError::Invalid(format!(
                "need n >= 1 and d >= 1, got n={n}, d={d}"
            )));
        }
        if features.len() != n * d {
            return Err(DataError::Invalid(format!(
                "feature buffer has {} values, expected {n}x{d}",
                features.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y != 1 && y != -1) {
            return Err(DataError::Invalid(format!(
                "label {} at index {i} is not ±1",
                labels[i]
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(DataError::Invalid(format!(
                "non-finite feature at row {}, column {}",
                i / d,
                i % d
            )));
        }
        Ok(Self {
            n,
            d,
            features,
            labels,
            weights: None,
            meta,
        })
    }

    /// Attaches an example distribution; must be non-negative and sum to 1.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, DataError> {
        validate_distribution(&weights, self.n, 1e-12).map_err(DataError::Invalid)?;
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    /// Selects rows by index, in the given order.
    pub fn subset(&self, indices: &[usize], step: String) -> Result<Self, DataError> {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let mut out = Dataset::new(features, self.d, labels, self.meta.derived(step))?;
        if let Some(w) = &self.weights {
            let picked: Vec<f64> = indices.iter().map(|&i| w[i]).collect();
            let total: f64 = picked.iter().sum();
            if total > 0.0 {
                out.weights = Some(picked.iter().map(|v| v / total).collect());
            }
        }
        Ok(out)
    }
}

/// Checks that `w` is a length-`n` probability vector within `tol`.
pub fn validate_distribution(w: &[f64], n: usize, tol: f64) -> Result<(), String> {
    if w.len() != n {
        return Err(format!("distribution has length {}, expected {n}", w.len()));
    }
    if let Some(i) = w.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(format!("distribution entry {i} is {} (must be >= 0)", w[i]));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() >= tol {
        return Err(format!("distribution sums to {total}, not 1"));
    }
    Ok(())
}

/// Seeded shuffle-and-cut into `(⌊n·f⌋, n − ⌊n·f⌋)` examples.
pub fn split(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::InvalidConfig(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n = ds.len();
    let n_train = (n as f64 * train_fraction).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(DataError::InvalidConfig(format!(
            "train_fraction {train_fraction} leaves an empty side for n={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let train = ds.subset(
        &order[..n_train],
        format!("split(train, fraction={train_fraction}, seed={seed})"),
    )?;
    let test = ds.subset(
        &order[n_train..],
        format!("split(test, fraction={train_fraction}, seed={seed})"),
    )?;
    Ok((train, test))
}

/// Per-feature centering and scaling recorded from a training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation per column. Constant (or
    /// numerically constant) columns keep scale 1.
    pub fn fit(ds: &Dataset) -> Self {
        let (n, d) = (ds.len(), ds.dim());
        let mut mean = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for j in 0..d {
            let first = ds.row(0)[j];
            if ds.rows().all(|r| r[j] == first) {
                mean[j] = first;
                continue;
            }
            let mu = ds.rows().map(|r| r[j]).sum::<f64>() / n as f64;
            let var = ds.rows().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            mean[j] = mu;
            if sd > 1e-12 * mu.abs().max(1.0) {
                scale[j] = sd;
            }
        }
        Self { mean, scale }
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset, DataError> {
        if ds.dim() != self.mean.len() {
            return Err(DataError::Invalid(format!(
                "standardizer has {} columns, dataset has {}",
                self.mean.len(),
                ds.dim()
            )));
        }
        let d = ds.dim();
        let features = ds
            .features()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - self.mean[i % d]) / self.scale[i % d])
            .collect();
        let mut out = Dataset::new(
            features,
            d,
            ds.labels().to_vec(),
            ds.meta.derived("standardize(train statistics)".into()),
        )?;
        out.weights = ds.weights.clone();
        Ok(out)
    }
}

/// Standardizes both sets with statistics from `train` only.
pub fn standardize(
    train: &Dataset,
    test: &Dataset,
) -> Result<(Dataset, Dataset, Standardizer), DataError> {
    let stats = Standardizer::fit(train);
    Ok((stats.apply(train)?, stats.apply(test)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Dataset {
        let labels = values.iter().map(|_| 1).collect();
        Dataset::new(values.to_vec(), 1, labels, DatasetMeta::new("test")).unwrap()
    }

    #[test]
    fn rejects_bad_labels_and_values() {
        assert!(Dataset::new(vec![1.0], 1, vec![0], DatasetMeta::default()).is_err());
        assert!(Dataset::new(vec![f64::NAN], 1, vec![1], DatasetMeta::default()).is_err());
        assert!(Dataset::new(vec![], 1, vec![], DatasetMeta::default()).is_err());
        let ds = column(&[1.0, 2.0]);
        assert!(ds.clone().with_weights(vec![0.5, 0.6]).is_err());
        assert!(ds.clone().with_weights(vec![-0.5, 1.5]).is_err());
        assert!(ds.with_weights(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let ds = column(&(0..10).map(f64::from).collect::<Vec<_>>());
        let (a, b) = split(&ds, 0.8, 3).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        let mut all: Vec<f64> = a.features().iter().chain(b.features()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, ds.features());

        let ds = column(&(0..101).map(f64::from).collect::<Vec<_>>());
        let (a, b) = split(&ds, 0.5, 3).unwrap();
        assert_eq!((a.len(), b.len()), (50, 51));
    }

    #[test]
    fn split_is_seeded() {
        let ds = column(&(0..50).map(f64::from).collect::<Vec<_>>());
        assert_eq!(split(&ds, 0.3, 9).unwrap(), split(&ds, 0.3, 9).unwrap());
        assert_ne!(
            split(&ds, 0.3, 9).unwrap().0,
            split(&ds, 0.3, 10).unwrap().0
        );
        assert!(split(&ds, 0.0, 1).is_err());
        assert!(split(&ds, 1.0, 1).is_err());
        assert!(split(&ds, f64::NAN, 1).is_err());
    }

    #[test]
    fn standardize_two_values() {
        let train = column(&[1.0, 3.0]);
        let (t, _, stats) = standardize(&train, &train).unwrap();
        assert_eq!(t.features(), &[-1.0, 1.0]);
        assert_eq!(stats.mean, vec![2.0]);
        assert_eq!(stats.scale, vec![1.0]);
    }

    #[test]
    fn constant_column_becomes_zero() {
        let train = column(&[0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]);
        let (t, test, _) = standardize(&train, &column(&[0.1])).unwrap();
        assert!(t.features().iter().all(|&v| v == 0.0));
        assert_eq!(test.features(), &[0.0]);
    }

    #[test]
    fn recorded_stats_reproduce_transform() {
        let train = column(&[0.3, -1.7, 2.9, 4.4, 0.0]);
        let (t, _, stats) = standardize(&train, &train).unwrap();
        assert_eq!(stats.apply(&train).unwrap(), t);
        let mean = t.features().iter().sum::<f64>() / 5.0;
        let sd = (t.features().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0).sqrt();
        assert!(mean.abs() < 1e-10);
        assert!((sd - 1.0).abs() < 1e-10);
    }
}

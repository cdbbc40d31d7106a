//! Co-training laboratory for Adaboost stump ensembles and one-hidden-layer
//! ReLU networks.
//!
//! The crate is split along the pipeline:
//!
//! - [`data`]: synthetic generators, CIFAR-10 ingestion, splitting and
//!   standardization.
//! - [`boost`]: decision stumps, Adaboost with staged prefixes, VC bound
//!   calculators.
//! - [`mlp`]: the network itself, SGD under phase schedules, masked
//!   sub-network training and checkpoints.
//! - [`info`]: plug-in (conditional) mutual information, matched random
//!   classifiers, error distributions and KL divergence.
//! - [`analysis`]: phase matrices, checkpoint selection, correlation and KL
//!   trajectories, learning order.
//! - [`experiment`]: configuration and the two end-to-end recipes.

pub mod analysis;
pub mod boost;
pub mod data;
pub mod experiment;
pub mod info;
pub mod mlp;
pub mod plot;
pub mod rng;

/// A binary label or prediction, always `-1` or `+1`.
pub type Label = i8;

/// Sign with the tie rule used throughout: `sign(0) = +1`.
#[inline]
pub fn sign(x: f64) -> Label {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// Fraction of positions where `pred` agrees with `labels`.
pub fn accuracy(pred: &[Label], labels: &[Label]) -> f64 {
    assert_eq!(pred.len(), labels.len());
    if labels.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
    hits as f64 / labels.len() as f64
}

/// Neumaier-compensated sum; keeps partition sums of a network's output layer
/// consistent with the full sum to well below 1e-10.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

//! Plug-in information estimators over ±1 alphabets, matched random
//! classifiers, significance baselines, and divergences between smoothed
//! error distributions. All quantities are in bits.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive_seed, rng_from_seed};
use crate::{accuracy, Label};

#[derive(Debug, Error)]
pub enum InfoError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("accuracy must be in [0, 1], got {0}")]
    Accuracy(f64),
    #[error("need at least {min} trials, got {got}")]
    TooFewTrials { got: usize, min: usize },
    #[error("smoothing must be finite and > 0, got {0}")]
    Smoothing(f64),
    #[error("non-finite score at index {0}")]
    NonFinite(usize),
    #[error("distribution has a zero or invalid entry at index {0}")]
    ZeroEntry(usize),
    #[error("value {value} at index {index} is not ±1")]
    Alphabet { index: usize, value: Label },
}

pub const MIN_SIGNIFICANCE_TRIALS: usize = 100;

/// Discrete predictions of one model (or ensemble stage) on a fixed
/// evaluation set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionTrace {
    pub source: String,
    pub predictions: Vec<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

impl PredictionTrace {
    pub fn new(source: impl Into<String>, predictions: Vec<Label>) -> Result<Self, InfoError> {
        check_alphabet(&predictions)?;
        Ok(Self {
            source: source.into(),
            predictions,
            scores: None,
        })
    }

    /// Signs of `scores` (with `sign(0) = +1`), keeping the scores.
    pub fn from_scores(source: impl Into<String>, scores: Vec<f64>) -> Self {
        Self {
            source: source.into(),
            predictions: scores.iter().map(|&s| crate::sign(s)).collect(),
            scores: Some(scores),
        }
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }
}

fn check_alphabet(xs: &[Label]) -> Result<(), InfoError> {
    match xs.iter().position(|&v| v != 1 && v != -1) {
        Some(index) => Err(InfoError::Alphabet {
            index,
            value: xs[index],
        }),
        None => Ok(()),
    }
}

fn same_len(a: usize, b: usize) -> Result<(), InfoError> {
    if a != b {
        return Err(InfoError::LengthMismatch(a, b));
    }
    if a == 0 {
        return Err(InfoError::Empty);
    }
    Ok(())
}

#[inline]
fn bit(v: Label) -> usize {
    usize::from(v > 0)
}

/// Plug-in entropy of a count table, with cell terms summed in ascending
/// count order so the result does not depend on how cells are indexed.
fn entropy(counts: &mut [usize], total: usize) -> f64 {
    counts.sort_unstable();
    let m = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / m;
            -p * p.log2()
        })
        .sum()
}

fn joint_counts(vars: &[&[Label]]) -> Vec<usize> {
    let mut counts = vec![0usize; 1 << vars.len()];
    for i in 0..vars[0].len() {
        let cell = vars
            .iter()
            .enumerate()
            .fold(0, |acc, (k, v)| acc | (bit(v[i]) << k));
        counts[cell] += 1;
    }
    counts
}

/// Plug-in joint entropy (bits) of one or more ±1 sequences.
pub fn joint_entropy(vars: &[&[Label]]) -> f64 {
    let m = vars[0].len();
    entropy(&mut joint_counts(vars), m)
}

/// `I(A;B) = H(A) + H(B) − H(A,B)` from the empirical 2×2 joint.
pub fn mutual_information(a: &[Label], b: &[Label]) -> Result<f64, InfoError> {
    same_len(a.len(), b.len())?;
    check_alphabet(a)?;
    check_alphabet(b)?;
    let mi = (joint_entropy(&[a]) + joint_entropy(&[b])) - joint_entropy(&[a, b]);
    Ok(mi.max(0.0))
}

/// `I(F;Y|G) = H(F,G) + H(G,Y) − H(G) − H(F,G,Y)`, clamped at 0 against
/// rounding.
pub fn conditional_mi(f: &[Label], y: &[Label], g: &[Label]) -> Result<f64, InfoError> {
    same_len(f.len(), y.len())?;
    same_len(f.len(), g.len())?;
    check_alphabet(f)?;
    check_alphabet(y)?;
    check_alphabet(g)?;
    // Grouped so that G = F and G = Y cancel exactly.
    let cmi = (joint_entropy(&[f, g]) - joint_entropy(&[g]))
        + (joint_entropy(&[g, y]) - joint_entropy(&[f, g, y]));
    debug_assert!(cmi > -1e-12, "conditional MI {cmi} below rounding slack");
    Ok(cmi.max(0.0))
}

/// Predictions that equal `labels[i]` independently with probability
/// `accuracy`.
pub fn random_classifier(
    labels: &[Label],
    accuracy: f64,
    seed: u64,
) -> Result<PredictionTrace, InfoError> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(InfoError::Accuracy(accuracy));
    }
    let mut rng = rng_from_seed(seed);
    let predictions = labels
        .iter()
        .map(|&y| {
            if rng.random::<f64>() < accuracy {
                y
            } else {
                -y
            }
        })
        .collect();
    Ok(PredictionTrace {
        source: format!("random(accuracy={accuracy}, seed={seed})"),
        predictions,
        scores: None,
    })
}

/// Observed conditional MI against a baseline of accuracy-matched random
/// classifiers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRecord {
    pub observed: f64,
    pub baseline_mean: f64,
    pub baseline_stddev: f64,
    /// `(observed − mean) / stddev`; absent when the baseline has no spread.
    pub z_score: Option<f64>,
    /// Fraction of baseline values `≤ observed`.
    pub p_value: f64,
    pub trials: usize,
    pub seed: u64,
    pub matched_accuracy: f64,
    /// `I(F;Y)` of the classifier under test.
    pub observed_mi: f64,
    /// Mean `I(R;Y)` over the random classifiers.
    pub baseline_mi_mean: f64,
    /// Set when the two MI values differ by more than 0.01 bits.
    pub mi_gap_flag: bool,
}

pub const MI_GAP_FLAG_BITS: f64 = 0.01;

/// Baseline: `conditional_mi(r, y, g)` for `trials` random classifiers `r`
/// whose accuracy equals the empirical accuracy of `f`. Trial `i` uses seed
/// `derive_seed(seed, i)`, so the result does not depend on thread count.
pub fn cmi_significance(
    f: &[Label],
    y: &[Label],
    g: &[Label],
    trials: usize,
    seed: u64,
) -> Result<SignificanceRecord, InfoError> {
    if trials < MIN_SIGNIFICANCE_TRIALS {
        return Err(InfoError::TooFewTrials {
            got: trials,
            min: MIN_SIGNIFICANCE_TRIALS,
        });
    }
    let observed = conditional_mi(f, y, g)?;
    let observed_mi = mutual_information(f, y)?;
    let acc = accuracy(f, y);
    let results: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let r = random_classifier(y, acc, derive_seed(seed, i))?;
            Ok((
                conditional_mi(&r.predictions, y, g)?,
                mutual_information(&r.predictions, y)?,
            ))
        })
        .collect::<Result<_, InfoError>>()?;
    let t = trials as f64;
    let mean = results.iter().map(|r| r.0).sum::<f64>() / t;
    let var = results.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (t - 1.0);
    let sd = var.sqrt();
    let p_value = results.iter().filter(|r| r.0 <= observed).count() as f64 / t;
    let baseline_mi_mean = results.iter().map(|r| r.1).sum::<f64>() / t;
    Ok(SignificanceRecord {
        observed,
        baseline_mean: mean,
        baseline_stddev: sd,
        z_score: (sd > 0.0).then(|| (observed - mean) / sd),
        p_value,
        trials,
        seed,
        matched_accuracy: acc,
        observed_mi,
        baseline_mi_mean,
        mi_gap_flag: (observed_mi - baseline_mi_mean).abs() > MI_GAP_FLAG_BITS,
    })
}

/// Normalized per-example error mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorDistribution {
    pub probs: Vec<f64>,
    pub smoothing: f64,
}

pub const DEFAULT_SMOOTHING: f64 = 1e-6;

/// `p_i = (|score_i − y_i| + ε) / Σ_j (|score_j − y_j| + ε)`.
pub fn error_distribution(
    scores: &[f64],
    labels: &[Label],
    smoothing: f64,
) -> Result<ErrorDistribution, InfoError> {
    same_len(scores.len(), labels.len())?;
    if !(smoothing.is_finite() && smoothing > 0.0) {
        return Err(InfoError::Smoothing(smoothing));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(InfoError::NonFinite(i));
    }
    let mass: Vec<f64> = scores
        .iter()
        .zip(labels)
        .map(|(s, &y)| (s - f64::from(y)).abs() + smoothing)
        .collect();
    let total: f64 = mass.iter().sum();
    Ok(ErrorDistribution {
        probs: mass.into_iter().map(|m| m / total).collect(),
        smoothing,
    })
}

/// [`error_distribution`] for a discrete ±1 trace.
pub fn trace_error_distribution(
    pred: &[Label],
    labels: &[Label],
    smoothing: f64,
) -> Result<ErrorDistribution, InfoError> {
    let scores: Vec<f64> = pred.iter().map(|&p| f64::from(p)).collect();
    error_distribution(&scores, labels, smoothing)
}

fn check_positive(p: &[f64]) -> Result<(), InfoError> {
    match p.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        Some(i) => Err(InfoError::ZeroEntry(i)),
        None => Ok(()),
    }
}

/// `D_KL(p‖q) = Σ p_i log2(p_i / q_i)`; both must be strictly positive.
pub fn kl_divergence(p: &ErrorDistribution, q: &ErrorDistribution) -> Result<f64, InfoError> {
    kl_bits(&p.probs, &q.probs)
}

pub fn kl_bits(p: &[f64], q: &[f64]) -> Result<f64, InfoError> {
    same_len(p.len(), q.len())?;
    check_positive(p)?;
    check_positive(q)?;
    let d: f64 = p.iter().zip(q).map(|(a, b)| a * (a / b).log2()).sum();
    Ok(d.max(0.0))
}

/// Jensen–Shannon divergence in bits (symmetric, bounded by 1).
pub fn js_divergence(p: &ErrorDistribution, q: &ErrorDistribution) -> Result<f64, InfoError> {
    same_len(p.probs.len(), q.probs.len())?;
    let mid: Vec<f64> = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    Ok(0.5 * kl_bits(&p.probs, &mid)? + 0.5 * kl_bits(&q.probs, &mid)?)
}

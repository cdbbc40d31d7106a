use serde::{Deserialize, Serialize};

use super::BoostError;
use crate::data::{validate_distribution, Dataset};
use crate::{sign, Label};

/// Weighted errors closer than this are treated as equal when breaking ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// `x ↦ polarity · sign(x[feature] − threshold)`, with `sign(0) = +1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: Label,
}

impl Stump {
    #[inline]
    pub fn predict(&self, x: &[f64]) -> Label {
        self.polarity * sign(x[self.feature] - self.threshold)
    }

    pub fn predict_all(&self, ds: &Dataset) -> Vec<Label> {
        ds.rows().map(|x| self.predict(x)).collect()
    }

    /// Weighted 0/1 error, summed in index order.
    pub fn weighted_error(&self, ds: &Dataset, weights: &[f64]) -> f64 {
        ds.rows()
            .zip(ds.labels())
            .zip(weights)
            .filter(|((x, &y), _)| self.predict(x) != y)
            .map(|(_, w)| w)
            .sum()
    }
}

/// Threshold between two consecutive distinct sorted values. Falls back to
/// the upper value when the midpoint rounds onto the lower one.
fn between(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

/// Candidate thresholds for one feature column, ascending: one below the
/// minimum (a constant predictor) and one between each pair of consecutive
/// distinct values.
pub fn candidate_thresholds(column: &[f64]) -> Vec<f64> {
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup_by(|a, b| a == b);
    let mut out = Vec::with_capacity(sorted.len());
    out.push(sorted[0] - 1.0);
    out.extend(sorted.windows(2).map(|w| between(w[0], w[1])));
    out
}

struct Candidate {
    feature: usize,
    threshold: f64,
    polarity: Label,
    error: f64,
}

/// Weighted empirical risk minimizer over all stumps.
///
/// Candidates are scanned in (feature, threshold, polarity +1 then −1) order;
/// among candidates within [`TIE_TOLERANCE`] of the minimum the first wins.
/// The returned error is recomputed directly from the weights.
pub fn fit_stump(ds: &Dataset, weights: &[f64]) -> Result<(Stump, f64), BoostError> {
    validate_distribution(weights, ds.len(), 1e-10).map_err(BoostError::InvalidWeights)?;
    let (n, d) = (ds.len(), ds.dim());
    let labels = ds.labels();
    let (mut w_pos, mut w_neg) = (0.0, 0.0);
    for (&y, &w) in labels.iter().zip(weights) {
        if y > 0 {
            w_pos += w;
        } else {
            w_neg += w;
        }
    }

    let mut candidates = Vec::with_capacity(2 * n * d);
    let mut order: Vec<usize> = (0..n).collect();
    for j in 0..d {
        let value = |i: usize| ds.row(i)[j];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        let below = value(order[0]) - 1.0;
        candidates.push(Candidate {
            feature: j,
            threshold: below,
            polarity: 1,
            error: w_neg,
        });
        candidates.push(Candidate {
            feature: j,
            threshold: below,
            polarity: -1,
            error: w_pos,
        });

        // Left of the threshold predicts −polarity, right predicts +polarity.
        let (mut left_pos, mut left_neg) = (0.0, 0.0);
        for q in 0..n - 1 {
            let i = order[q];
            if labels[i] > 0 {
                left_pos += weights[i];
            } else {
                left_neg += weights[i];
            }
            let (lo, hi) = (value(i), value(order[q + 1]));
            if lo == hi {
                continue;
            }
            let t = between(lo, hi);
            candidates.push(Candidate {
                feature: j,
                threshold: t,
                polarity: 1,
                error: left_pos + (w_neg - left_neg),
            });
            candidates.push(Candidate {
                feature: j,
                threshold: t,
                polarity: -1,
                error: left_neg + (w_pos - left_pos),
            });
        }
    }

    let best = candidates
        .iter()
        .map(|c| c.error)
        .fold(f64::INFINITY, f64::min);
    let chosen = candidates
        .iter()
        .find(|c| c.error <= best + TIE_TOLERANCE)
        .expect("at least two candidates per feature");
    let stump = Stump {
        feature: chosen.feature,
        threshold: chosen.threshold,
        polarity: chosen.polarity,
    };
    let error = stump.weighted_error(ds, weights);
    Ok((stump, error))
}

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::data::Dataset;
use crate::mlp::MlpModel;
use crate::{accuracy, Label};

pub const DEFAULT_BINS: usize = 4;
/// Bin accuracy at which a bin counts as mastered.
pub const MASTERY_ACCURACY: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifficultyScore {
    pub class_rank: usize,
    pub centroid_distance: f64,
    pub bin: usize,
}

/// Classes ordered easiest first by per-class error of `pred`; equal errors
/// keep `−1` before `+1`. Classes absent from `labels` are omitted.
pub fn class_ranks_from_errors(pred: &[Label], labels: &[Label]) -> Vec<Label> {
    let mut classes: Vec<(f64, Label)> = [-1i8, 1]
        .into_iter()
        .filter_map(|c| {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            (!idx.is_empty()).then(|| {
                let wrong = idx.iter().filter(|&&i| pred[i] != c).count();
                (wrong as f64 / idx.len() as f64, c)
            })
        })
        .collect();
    classes.sort_by(|a, b| a.0.total_cmp(&b.0));
    classes.into_iter().map(|(_, c)| c).collect()
}

/// Per-example difficulty: class rank (from `class_order`, easiest first,
/// or from the model's own per-class error), Euclidean distance of the
/// hidden embedding to its class centroid, and a quantile bin of the
/// lexicographic order `(class_rank, distance)`. Equal keys share a bin.
pub fn difficulty_scores(
    model: &MlpModel,
    ds: &Dataset,
    class_order: Option<&[Label]>,
    bins: usize,
) -> Result<Vec<DifficultyScore>, AnalysisError> {
    if ds.is_empty() {
        return Err(AnalysisError::Empty("dataset".into()));
    }
    if bins == 0 {
        return Err(AnalysisError::Invalid("bins must be positive".into()));
    }
    let labels = ds.labels();
    let order = match class_order {
        Some(o) => o.to_vec(),
        None => class_ranks_from_errors(&model.predictions(ds)?, labels),
    };
    let rank_of = |c: Label| {
        order
            .iter()
            .position(|&o| o == c)
            .ok_or_else(|| AnalysisError::Invalid(format!("class {c} missing from class order")))
    };
    let emb: Vec<Vec<f64>> = ds
        .rows()
        .map(|x| model.embed(x))
        .collect::<Result<_, _>>()?;
    let k = model.hidden();
    let mut centroids = Vec::new();
    for c in [-1i8, 1] {
        let members: Vec<&Vec<f64>> = emb
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(e, _)| e)
            .collect();
        let mut mean = vec![0.0; k];
        for e in &members {
            for (m, v) in mean.iter_mut().zip(e.iter()) {
                *m += v;
            }
        }
        let count = members.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= count);
        centroids.push((c, mean));
    }
    let mut scores: Vec<DifficultyScore> = emb
        .iter()
        .zip(labels)
        .map(|(e, &c)| {
            let centroid = &centroids.iter().find(|(l, _)| *l == c).expect("±1").1;
            let dist = e
                .iter()
                .zip(centroid)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            Ok(DifficultyScore {
                class_rank: rank_of(c)?,
                centroid_distance: dist,
                bin: 0,
            })
        })
        .collect::<Result<_, AnalysisError>>()?;
    let n = scores.len();
    let key = |s: &DifficultyScore| (s.class_rank, s.centroid_distance);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let (ka, kb) = (key(&scores[a]), key(&scores[b]));
        ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.cmp(&b))
    });
    let mut first = 0;
    for pos in 0..n {
        if pos > 0 && key(&scores[idx[pos]]) != key(&scores[idx[pos - 1]]) {
            first = pos;
        }
        scores[idx[pos]].bin = first * bins / n;
    }
    Ok(scores)
}

/// Average ranks (1-based, ties share the mean rank).
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; `None` when fewer than two points or either
/// side has no rank variance.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinCurves {
    /// `[bin][time]`; `None` for an empty bin.
    pub accuracy: Vec<Vec<Option<f64>>>,
    /// First time index with accuracy ≥ 0.9; `None` if never.
    pub mastery: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningOrder {
    pub bins: usize,
    pub bin_sizes: Vec<usize>,
    /// Network, over checkpoints.
    pub network: BinCurves,
    /// Ensemble, over stages.
    pub ensemble: BinCurves,
    /// Spearman correlation of mastery times over bins mastered by both.
    pub rank_agreement: Option<f64>,
    /// Set when the agreement is undefined (too few bins, or no spread).
    pub degenerate: bool,
}

fn curves(traces: &[Vec<Label>], labels: &[Label], bins: &[usize], q: usize) -> BinCurves {
    let members: Vec<Vec<usize>> = (0..q)
        .map(|b| (0..labels.len()).filter(|&i| bins[i] == b).collect())
        .collect();
    let accuracy: Vec<Vec<Option<f64>>> = members
        .iter()
        .map(|m| {
            traces
                .iter()
                .map(|t| {
                    (!m.is_empty()).then(|| {
                        m.iter().filter(|&&i| t[i] == labels[i]).count() as f64 / m.len() as f64
                    })
                })
                .collect()
        })
        .collect();
    let mastery = accuracy
        .iter()
        .map(|row| {
            row.iter()
                .position(|a| a.is_some_and(|a| a >= MASTERY_ACCURACY))
        })
        .collect();
    BinCurves { accuracy, mastery }
}

/// Per-bin accuracy over time for both model families, and how well their
/// bin mastery orders agree.
pub fn learning_order_curves(
    network: &[Vec<Label>],
    ensemble: &[Vec<Label>],
    labels: &[Label],
    scores: &[DifficultyScore],
    bins: usize,
) -> Result<LearningOrder, AnalysisError> {
    let m = labels.len();
    if scores.len() != m {
        return Err(AnalysisError::Shape(format!(
            "{} scores for {m} examples",
            scores.len()
        )));
    }
    if network.iter().chain(ensemble).any(|t| t.len() != m) {
        return Err(AnalysisError::Shape(
            "trace length differs from labels".into(),
        ));
    }
    let bin_of: Vec<usize> = scores.iter().map(|s| s.bin).collect();
    if let Some(&b) = bin_of.iter().find(|&&b| b >= bins) {
        return Err(AnalysisError::Invalid(format!(
            "bin {b} out of range for {bins} bins"
        )));
    }
    let f = curves(network, labels, &bin_of, bins);
    let g = curves(ensemble, labels, &bin_of, bins);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (x, y) in f.mastery.iter().zip(&g.mastery) {
        if let (Some(x), Some(y)) = (x, y) {
            a.push(*x as f64);
            b.push(*y as f64);
        }
    }
    let rank_agreement = spearman(&a, &b);
    Ok(LearningOrder {
        bins,
        bin_sizes: (0..bins)
            .map(|q| bin_of.iter().filter(|&&x| x == q).count())
            .collect(),
        network: f,
        ensemble: g,
        degenerate: rank_agreement.is_none(),
        rank_agreement,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalErrorComparison {
    pub constrained_error: f64,
    pub vanilla_error: f64,
    /// `constrained − vanilla`.
    pub gap: f64,
}

/// Test errors of the final checkpoints of two runs. Reported, not judged.
pub fn final_error_comparison(
    constrained: &[Label],
    vanilla: &[Label],
    labels: &[Label],
) -> Result<FinalErrorComparison, AnalysisError> {
    if constrained.len() != labels.len() || vanilla.len() != labels.len() {
        return Err(AnalysisError::Shape(
            "prediction and label lengths differ".into(),
        ));
    }
    if labels.is_empty() {
        return Err(AnalysisError::Empty("test set".into()));
    }
    let ce = 1.0 - accuracy(constrained, labels);
    let ve = 1.0 - accuracy(vanilla, labels);
    Ok(FinalErrorComparison {
        constrained_error: ce,
        vanilla_error: ve,
        gap: ce - ve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DatasetMeta;

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[0.0, 0.0], &[0.0, 0.0]), None);
        assert_eq!(average_ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn learning_order_degenerate_and_identical() {
        let y: Vec<Label> = (0..8).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let scores: Vec<DifficultyScore> = (0..8)
            .map(|i| DifficultyScore {
                class_rank: 0,
                centroid_distance: i as f64,
                bin: i / 2,
            })
            .collect();
        let perfect = vec![y.clone(); 3];
        let lo = learning_order_curves(&perfect, &perfect, &y, &scores, 4).unwrap();
        assert!(lo.network.mastery.iter().all(|m| *m == Some(0)));
        assert!(lo.degenerate && lo.rank_agreement.is_none());

        let mut t0 = y.clone();
        t0[4..].iter_mut().for_each(|v| *v = -*v);
        let mut t1 = y.clone();
        t1[6..].iter_mut().for_each(|v| *v = -*v);
        let traces = vec![t0, t1, y.clone()];
        let lo = learning_order_curves(&traces, &traces, &y, &scores, 4).unwrap();
        assert_eq!(lo.network.mastery, vec![Some(0), Some(0), Some(1), Some(2)]);
        assert_eq!(lo.rank_agreement, Some(1.0));
        assert_eq!(lo.bin_sizes, vec![2; 4]);
    }

    #[test]
    fn difficulty_bins_and_duplicates() {
        let model = MlpModel::init(2, 5, 7).unwrap();
        let feats = vec![
            0.1, 0.2, 0.1, 0.2, 3.0, -1.0, -2.0, 0.5, 1.0, 1.0, -0.3, 0.9,
        ];
        let ds = Dataset::new(feats, 2, vec![1, 1, 1, -1, -1, -1], DatasetMeta::new("t")).unwrap();
        let s = difficulty_scores(&model, &ds, Some(&[1, -1]), 4).unwrap();
        assert_eq!(s[0], s[1]);
        assert!(s.iter().all(|d| d.centroid_distance >= 0.0 && d.bin < 4));
        assert!(s[..3].iter().all(|d| d.class_rank == 0));
        assert!(s[3..].iter().all(|d| d.class_rank == 1));
        assert!(s[3..].iter().all(|d| d.bin >= s[0].bin));
        assert!(difficulty_scores(&model, &ds, Some(&[1]), 4).is_err());

        let one = Dataset::new(vec![0.3, 0.4], 2, vec![1], DatasetMeta::new("t")).unwrap();
        assert_eq!(
            difficulty_scores(&model, &one, None, 4).unwrap()[0].centroid_distance,
            0.0
        );
    }

    #[test]
    fn final_error_examples() {
        let y: Vec<Label> = vec![1, -1, 1, -1];
        let same = final_error_comparison(&y, &y, &y).unwrap();
        assert_eq!(same.gap, 0.0);
        let chance = vec![1, 1, -1, -1];
        let r = final_error_comparison(&y, &chance, &y).unwrap();
        assert_eq!(r.gap, -0.5);
    }
}

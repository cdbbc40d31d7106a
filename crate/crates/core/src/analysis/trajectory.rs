use serde::{Deserialize, Serialize};

use super::{correlation_matrix, match_subclassifiers, pearson, AnalysisError, MatchResult};
use crate::boost::BoostEnsemble;
use crate::data::Dataset;
use crate::info::{error_distribution, js_divergence, kl_divergence, ErrorDistribution};
use crate::mlp::{CheckpointSeries, MlpModel, SubnetworkSpec};
use crate::{compensated_sum, Label};

/// What counts as one sub-classifier of the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubclassifierMode {
    /// Hidden unit `j`: `ReLU(⟨w_j, x⟩)`.
    Neuron,
    /// Sub-network `J`: `f^J(x)`.
    Subnetwork,
}

/// Output sequences over `eval`, one per sub-classifier.
pub fn subclassifier_outputs(
    model: &MlpModel,
    eval: &Dataset,
    mode: SubclassifierMode,
    specs: &[SubnetworkSpec],
) -> Result<Vec<Vec<f64>>, AnalysisError> {
    let hidden: Vec<Vec<f64>> = eval
        .rows()
        .map(|x| model.embed(x))
        .collect::<Result<_, _>>()?;
    match mode {
        SubclassifierMode::Neuron => Ok((0..model.hidden())
            .map(|j| hidden.iter().map(|h| h[j]).collect())
            .collect()),
        SubclassifierMode::Subnetwork => {
            crate::mlp::validate_specs(specs, model.hidden(), usize::MAX)?;
            let v = model.output_weights();
            Ok(specs
                .iter()
                .map(|s| {
                    hidden
                        .iter()
                        .map(|h| compensated_sum(s.units().iter().map(|&j| v[j] * h[j])))
                        .collect()
                })
                .collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubclassifierSnapshot {
    pub step: usize,
    pub phase: usize,
    pub outputs: Vec<Vec<f64>>,
}

/// Inputs of the trajectory analyses: evaluation labels, weak-learner
/// predictions (one row per round) and sub-classifier outputs per
/// checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubclassifierTraces {
    pub mode: SubclassifierMode,
    pub labels: Vec<Label>,
    pub stumps: Vec<Vec<Label>>,
    pub checkpoints: Vec<SubclassifierSnapshot>,
}

pub fn subclassifier_traces(
    series: &CheckpointSeries,
    ensemble: &BoostEnsemble,
    eval: &Dataset,
    mode: SubclassifierMode,
    specs: &[SubnetworkSpec],
) -> Result<SubclassifierTraces, AnalysisError> {
    if eval.is_empty() {
        return Err(AnalysisError::Empty("evaluation set".into()));
    }
    let checkpoints = series
        .checkpoints
        .iter()
        .map(|c| {
            Ok(SubclassifierSnapshot {
                step: c.step,
                phase: c.phase,
                outputs: subclassifier_outputs(&c.model, eval, mode, specs)?,
            })
        })
        .collect::<Result<_, AnalysisError>>()?;
    Ok(SubclassifierTraces {
        mode,
        labels: eval.labels().to_vec(),
        stumps: ensemble.stump_predictions(eval),
        checkpoints,
    })
}

fn check(t: &SubclassifierTraces) -> Result<(), AnalysisError> {
    if t.checkpoints.len() < 2 {
        return Err(AnalysisError::Invalid(format!(
            "need at least 2 checkpoints, got {}",
            t.checkpoints.len()
        )));
    }
    if t.stumps.is_empty() {
        return Err(AnalysisError::Empty("weak-learner predictions".into()));
    }
    let m = t.labels.len();
    let k = t.checkpoints[0].outputs.len();
    if k == 0 {
        return Err(AnalysisError::Empty("sub-classifier outputs".into()));
    }
    for c in &t.checkpoints {
        if c.outputs.len() != k || c.outputs.iter().any(|o| o.len() != m) {
            return Err(AnalysisError::Shape(format!(
                "checkpoint at step {}",
                c.step
            )));
        }
    }
    if t.stumps.iter().any(|s| s.len() != m) {
        return Err(AnalysisError::Shape("weak-learner predictions".into()));
    }
    Ok(())
}

fn as_f64(p: &[Label]) -> Vec<f64> {
    p.iter().map(|&v| f64::from(v)).collect()
}

fn mean_pairwise_corr(outputs: &[Vec<f64>]) -> Option<f64> {
    let k = outputs.len();
    if k < 2 {
        return None;
    }
    let mut sum = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            sum += pearson(&outputs[a], &outputs[b]);
        }
    }
    Some(sum / (k * (k - 1) / 2) as f64)
}

/// Kendall's tau-b between `xs` and `ys`; `None` when either side is
/// constant.
pub fn kendall_tau_b(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let dx = xs[i].partial_cmp(&xs[j])?;
            let dy = ys[i].partial_cmp(&ys[j])?;
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {}
                (Equal, _) => tx += 1,
                (_, Equal) => ty += 1,
                _ if dx == dy => conc += 1,
                _ => disc += 1,
            }
        }
    }
    let n1 = (conc + disc + tx) as f64;
    let n2 = (conc + disc + ty) as f64;
    if n1 == 0.0 || n2 == 0.0 {
        return None;
    }
    Some((conc - disc) as f64 / (n1 * n2).sqrt())
}

fn trend(series: &[f64]) -> Option<f64> {
    let idx: Vec<f64> = (0..series.len()).map(|i| i as f64).collect();
    kendall_tau_b(&idx, series)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTrajectory {
    pub mode: SubclassifierMode,
    pub steps: Vec<usize>,
    /// Matching computed at the final checkpoint and held fixed.
    pub matching: MatchResult,
    /// Mean `corr(f_i, h_{π(i)})` over matched pairs, per checkpoint.
    pub matched_corr: Vec<f64>,
    /// Mean `corr(f_a, f_b)` over pairs `a < b`; `None` with one
    /// sub-classifier.
    pub pairwise_corr: Vec<Option<f64>>,
    pub matched_trend: Option<f64>,
    pub pairwise_trend: Option<f64>,
    /// Per-checkpoint re-matching, when requested.
    pub rematched_corr: Option<Vec<f64>>,
}

pub fn correlation_trajectories(
    t: &SubclassifierTraces,
    rematch: bool,
) -> Result<CorrelationTrajectory, AnalysisError> {
    check(t)?;
    let stumps: Vec<Vec<f64>> = t.stumps.iter().map(|s| as_f64(s)).collect();
    let mats: Vec<Vec<Vec<f64>>> = t
        .checkpoints
        .iter()
        .map(|c| correlation_matrix(&c.outputs, &stumps))
        .collect::<Result<_, _>>()?;
    let matching = match_subclassifiers(mats.last().expect("checked"))?;
    let matched_corr: Vec<f64> = mats
        .iter()
        .map(|m| {
            let s: f64 = matching.pairs.iter().map(|&(r, c)| m[r][c]).sum();
            s / matching.pairs.len() as f64
        })
        .collect();
    let pairwise_corr: Vec<Option<f64>> = t
        .checkpoints
        .iter()
        .map(|c| mean_pairwise_corr(&c.outputs))
        .collect();
    let pairwise_trend = if pairwise_corr.iter().all(Option::is_some) {
        trend(&pairwise_corr.iter().map(|v| v.unwrap()).collect::<Vec<_>>())
    } else {
        None
    };
    let rematched_corr = rematch
        .then(|| {
            mats.iter()
                .map(|m| match_subclassifiers(m).map(|r| r.mean()))
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    Ok(CorrelationTrajectory {
        mode: t.mode,
        steps: t.checkpoints.iter().map(|c| c.step).collect(),
        matched_trend: trend(&matched_corr),
        matching,
        matched_corr,
        pairwise_corr,
        pairwise_trend,
        rematched_corr,
    })
}

/// `tanh` of the z-scored sequence (population sd; constant input maps to
/// zeros). A sequence already in `{−1, +1}` is a discrete trace and is
/// returned unchanged.
pub fn squash_scores(scores: &[f64]) -> Vec<f64> {
    if scores.iter().all(|&s| s == 1.0 || s == -1.0) {
        return scores.to_vec();
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 || !sd.is_finite() {
        return vec![0.0; scores.len()];
    }
    scores.iter().map(|s| ((s - mean) / sd).tanh()).collect()
}

/// Largest single-step change of a series, between consecutive checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub from_step: usize,
    pub to_step: usize,
    pub delta: f64,
}

fn change_point(steps: &[usize], ys: &[f64], drop: bool) -> Option<ChangePoint> {
    let mut best: Option<ChangePoint> = None;
    for i in 1..ys.len() {
        let delta = ys[i] - ys[i - 1];
        let better = match &best {
            None => true,
            Some(b) if drop => delta < b.delta,
            Some(b) => delta > b.delta,
        };
        if better {
            best = Some(ChangePoint {
                from_step: steps[i - 1],
                to_step: steps[i],
                delta,
            });
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlTrajectory {
    pub steps: Vec<usize>,
    pub smoothing: f64,
    pub pairs: Vec<(usize, usize)>,
    /// `[checkpoint][pair]` = `D_KL(errors(f_i) ‖ errors(h_π(i)))`.
    pub kl_f_h: Vec<Vec<f64>>,
    /// `[checkpoint][pair]` = `D_KL(errors(h_π(i)) ‖ errors(f_i))`.
    pub kl_h_f: Vec<Vec<f64>>,
    pub js_f_h: Vec<Vec<f64>>,
    pub mean_kl_f_h: Vec<f64>,
    pub mean_kl_h_f: Vec<f64>,
    /// Mean `D_KL(errors(f_a) ‖ errors(f_b))` over ordered pairs `a ≠ b`.
    pub pairwise_kl: Vec<Option<f64>>,
    pub matched_drop: Option<ChangePoint>,
    pub pairwise_rise: Option<ChangePoint>,
}

/// Error-distribution divergences along training, for the pairs of
/// `matching` (usually the final-checkpoint matching).
pub fn error_kl_trajectories(
    t: &SubclassifierTraces,
    matching: &MatchResult,
    smoothing: f64,
) -> Result<KlTrajectory, AnalysisError> {
    check(t)?;
    let y = &t.labels;
    let h_err: Vec<ErrorDistribution> = t
        .stumps
        .iter()
        .map(|s| error_distribution(&as_f64(s), y, smoothing))
        .collect::<Result<_, _>>()?;
    let n_pairs = matching.pairs.len();
    let mut out = KlTrajectory {
        steps: t.checkpoints.iter().map(|c| c.step).collect(),
        smoothing,
        pairs: matching.pairs.clone(),
        kl_f_h: Vec::new(),
        kl_h_f: Vec::new(),
        js_f_h: Vec::new(),
        mean_kl_f_h: Vec::new(),
        mean_kl_h_f: Vec::new(),
        pairwise_kl: Vec::new(),
        matched_drop: None,
        pairwise_rise: None,
    };
    for c in &t.checkpoints {
        let f_err: Vec<ErrorDistribution> = c
            .outputs
            .iter()
            .map(|o| error_distribution(&squash_scores(o), y, smoothing))
            .collect::<Result<_, _>>()?;
        let (mut fh, mut hf, mut js) = (Vec::new(), Vec::new(), Vec::new());
        for &(r, col) in &matching.pairs {
            let (f, h) = (
                f_err
                    .get(r)
                    .ok_or_else(|| AnalysisError::Shape(format!("no sub-classifier {r}")))?,
                h_err
                    .get(col)
                    .ok_or_else(|| AnalysisError::Shape(format!("no weak learner {col}")))?,
            );
            fh.push(kl_divergence(f, h)?);
            hf.push(kl_divergence(h, f)?);
            js.push(js_divergence(f, h)?);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / n_pairs.max(1) as f64;
        out.mean_kl_f_h.push(mean(&fh));
        out.mean_kl_h_f.push(mean(&hf));
        out.kl_f_h.push(fh);
        out.kl_h_f.push(hf);
        out.js_f_h.push(js);
        let k = f_err.len();
        out.pairwise_kl.push((k >= 2).then(|| {
            let mut sum = 0.0;
            for a in 0..k {
                for b in 0..k {
                    if a != b {
                        sum += kl_divergence(&f_err[a], &f_err[b]).expect("smoothed, equal length");
                    }
                }
            }
            sum / (k * (k - 1)) as f64
        }));
    }
    out.matched_drop = change_point(&out.steps, &out.mean_kl_f_h, true);
    if out.pairwise_kl.iter().all(Option::is_some) {
        let ys: Vec<f64> = out.pairwise_kl.iter().map(|v| v.unwrap()).collect();
        out.pairwise_rise = change_point(&out.steps, &ys, false);
    }
    Ok(out)
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::boost::BoostEnsemble;
use crate::data::Dataset;
use crate::info::{cmi_significance, conditional_mi, PredictionTrace, SignificanceRecord};
use crate::mlp::CheckpointSeries;
use crate::rng::derive_seed;
use crate::{accuracy, Label};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointTrace {
    pub step: usize,
    pub phase: usize,
    pub trace: PredictionTrace,
}

/// Everything a phase report is computed from: labels of the evaluation
/// set, one trace per network checkpoint, one per ensemble stage
/// (`stages[b]` is `G_{b+1}`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTraces {
    pub labels: Vec<Label>,
    pub checkpoints: Vec<CheckpointTrace>,
    pub stages: Vec<PredictionTrace>,
}

pub fn phase_traces(
    series: &CheckpointSeries,
    ensemble: &BoostEnsemble,
    eval: &Dataset,
) -> Result<PhaseTraces, AnalysisError> {
    if eval.is_empty() {
        return Err(AnalysisError::Empty("evaluation set".into()));
    }
    if series.checkpoints.is_empty() {
        return Err(AnalysisError::Empty("checkpoint series".into()));
    }
    let checkpoints = series
        .checkpoints
        .iter()
        .map(|c| {
            let mut trace =
                PredictionTrace::from_scores(format!("mlp@step{}", c.step), c.model.scores(eval)?);
            trace.scores = None;
            Ok(CheckpointTrace {
                step: c.step,
                phase: c.phase,
                trace,
            })
        })
        .collect::<Result<_, AnalysisError>>()?;
    let stages = (1..=ensemble.rounds())
        .map(|b| {
            Ok(PredictionTrace {
                source: format!("adaboost@stage{b}"),
                predictions: ensemble.staged_predictions(b, eval)?,
                scores: None,
            })
        })
        .collect::<Result<_, AnalysisError>>()?;
    Ok(PhaseTraces {
        labels: eval.labels().to_vec(),
        checkpoints,
        stages,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSettings {
    /// Number of phases `J`; defaults to `min(schedule phases, rounds − 1)`.
    pub phases: Option<usize>,
    /// Level below which a CMI cell counts as "≈ 0" in the report.
    pub threshold: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedCheckpoint {
    /// Phase `i`, 1-based.
    pub phase: usize,
    /// Index into the checkpoint grid.
    pub checkpoint: usize,
    pub step: usize,
    /// `max(I(F;Y|G_{i+1}), I(G_i;Y|F))`.
    pub objective: f64,
    pub cmi_f_given_next_g: f64,
    pub cmi_g_given_f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSelection {
    pub requested: usize,
    pub selected: Vec<SelectedCheckpoint>,
    /// Set when fewer than `requested` phases could be placed.
    pub diagnostic: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseDirection {
    /// `I(F_{T_i}; Y | G_{i+1})` against random classifiers matched to `F`.
    Forward,
    /// `I(G_i; Y | F_{T_{i+1}})` against random classifiers matched to `G_i`;
    /// the last phase uses the final checkpoint.
    Reverse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSignificance {
    pub phase: usize,
    pub direction: PhaseDirection,
    pub checkpoint: usize,
    pub step: usize,
    /// Ensemble stage `b` of `G_b`, 1-based.
    pub stage: usize,
    pub below_threshold: bool,
    pub record: SignificanceRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub units: String,
    pub steps: Vec<usize>,
    pub checkpoint_phases: Vec<usize>,
    /// Stage numbers `b` of the columns (`G_b`).
    pub stages: Vec<usize>,
    pub f_accuracy: Vec<f64>,
    pub g_accuracy: Vec<f64>,
    /// `[a][b]` = `I(F_a; Y | G_{b+1})`.
    pub cmi_f_given_g: Vec<Vec<f64>>,
    /// `[a][b]` = `I(G_{b+1}; Y | F_a)`.
    pub cmi_g_given_f: Vec<Vec<f64>>,
    pub phases: usize,
    pub settings: PhaseSettings,
    pub selection: PhaseSelection,
    pub significance: Vec<PhaseSignificance>,
}

/// Greedy `T_i = argmin_{T > T_{i−1}} max(I(F_T;Y|G_{i+1}), I(G_i;Y|F_T))`
/// with `T_0 = 0`; equal objectives go to the earliest step.
pub fn select_phase_checkpoints(
    steps: &[usize],
    cmi_f_given_g: &[Vec<f64>],
    cmi_g_given_f: &[Vec<f64>],
    phases: usize,
) -> Result<PhaseSelection, AnalysisError> {
    let stages = cmi_f_given_g.first().map_or(0, Vec::len);
    if steps.len() != cmi_f_given_g.len() || steps.len() != cmi_g_given_f.len() {
        return Err(AnalysisError::Shape(
            "matrix rows must match checkpoint steps".into(),
        ));
    }
    if phases + 1 > stages {
        return Err(AnalysisError::Invalid(format!(
            "{phases} phases need {} ensemble stages, grid has {stages}",
            phases + 1
        )));
    }
    let mut selected = Vec::with_capacity(phases);
    let mut prev = 0;
    let mut diagnostic = None;
    for i in 1..=phases {
        let mut best: Option<SelectedCheckpoint> = None;
        for (a, &step) in steps.iter().enumerate() {
            if step <= prev {
                continue;
            }
            let fwd = cmi_f_given_g[a][i];
            let rev = cmi_g_given_f[a][i - 1];
            let objective = fwd.max(rev);
            if best.as_ref().is_none_or(|b| objective < b.objective) {
                best = Some(SelectedCheckpoint {
                    phase: i,
                    checkpoint: a,
                    step,
                    objective,
                    cmi_f_given_next_g: fwd,
                    cmi_g_given_f: rev,
                });
            }
        }
        match best {
            Some(b) => {
                prev = b.step;
                selected.push(b);
            }
            None => {
                diagnostic = Some(format!(
                    "phase {i}: no checkpoint after step {prev}; {} of {phases} phases placed",
                    i - 1
                ));
                break;
            }
        }
    }
    Ok(PhaseSelection {
        requested: phases,
        selected,
        diagnostic,
    })
}

fn check_traces(t: &PhaseTraces) -> Result<(), AnalysisError> {
    let m = t.labels.len();
    if m == 0 {
        return Err(AnalysisError::Empty("evaluation set".into()));
    }
    if t.checkpoints.is_empty() || t.stages.is_empty() {
        return Err(AnalysisError::Empty("checkpoint or stage traces".into()));
    }
    let lens = t
        .checkpoints
        .iter()
        .map(|c| &c.trace)
        .chain(&t.stages)
        .map(PredictionTrace::len);
    if let Some(l) = lens.into_iter().find(|&l| l != m) {
        return Err(AnalysisError::Shape(format!(
            "trace of length {l} for {m} labels"
        )));
    }
    Ok(())
}

/// Full report: both CMI matrices, selected phase checkpoints and
/// significance of each selected phase pair. A pure function of its inputs.
pub fn phase_report(
    traces: &PhaseTraces,
    schedule_phases: usize,
    settings: &PhaseSettings,
) -> Result<PhaseReport, AnalysisError> {
    check_traces(traces)?;
    let y = &traces.labels;
    let rounds = traces.stages.len();
    let phases = settings
        .phases
        .unwrap_or_else(|| schedule_phases.min(rounds.saturating_sub(1)));

    let rows: Vec<(Vec<f64>, Vec<f64>)> = traces
        .checkpoints
        .par_iter()
        .map(|c| {
            let f = &c.trace.predictions;
            let mut fg = Vec::with_capacity(rounds);
            let mut gf = Vec::with_capacity(rounds);
            for g in &traces.stages {
                fg.push(conditional_mi(f, y, &g.predictions)?);
                gf.push(conditional_mi(&g.predictions, y, f)?);
            }
            Ok((fg, gf))
        })
        .collect::<Result<_, AnalysisError>>()?;
    let (cmi_f_given_g, cmi_g_given_f): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let steps: Vec<usize> = traces.checkpoints.iter().map(|c| c.step).collect();

    let selection = select_phase_checkpoints(&steps, &cmi_f_given_g, &cmi_g_given_f, phases)?;

    let last = traces.checkpoints.len() - 1;
    let mut jobs = Vec::new();
    for (k, s) in selection.selected.iter().enumerate() {
        let i = s.phase;
        jobs.push((i, PhaseDirection::Forward, s.checkpoint, i + 1));
        let next = selection.selected.get(k + 1).map_or(last, |n| n.checkpoint);
        jobs.push((i, PhaseDirection::Reverse, next, i));
    }
    let significance = jobs
        .into_iter()
        .enumerate()
        .map(|(j, (phase, direction, a, stage))| {
            let f = &traces.checkpoints[a].trace.predictions;
            let g = &traces.stages[stage - 1].predictions;
            let seed = derive_seed(settings.seed, j as u64);
            let record = match direction {
                PhaseDirection::Forward => cmi_significance(f, y, g, settings.trials, seed)?,
                PhaseDirection::Reverse => cmi_significance(g, y, f, settings.trials, seed)?,
            };
            Ok(PhaseSignificance {
                phase,
                direction,
                checkpoint: a,
                step: steps[a],
                stage,
                below_threshold: record.observed < settings.threshold,
                record,
            })
        })
        .collect::<Result<_, AnalysisError>>()?;

    Ok(PhaseReport {
        units: "bits".into(),
        checkpoint_phases: traces.checkpoints.iter().map(|c| c.phase).collect(),
        stages: (1..=rounds).collect(),
        f_accuracy: traces
            .checkpoints
            .iter()
            .map(|c| accuracy(&c.trace.predictions, y))
            .collect(),
        g_accuracy: traces
            .stages
            .iter()
            .map(|g| accuracy(&g.predictions, y))
            .collect(),
        steps,
        cmi_f_given_g,
        cmi_g_given_f,
        phases,
        settings: PhaseSettings {
            phases: Some(phases),
            ..settings.clone()
        },
        selection,
        significance,
    })
}

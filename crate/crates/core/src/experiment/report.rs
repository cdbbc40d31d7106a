use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::output::{format_cell, io_err, matrix_csv, Manifest, RunDir};
use super::recipes::{BoostSummary, Seeds};
use super::{ExperimentError, StageExt};
use crate::analysis::{
    correlation_trajectories, error_kl_trajectories, final_error_comparison, learning_order_curves,
    phase_report, CorrelationTrajectory, DifficultyScore, FinalErrorComparison, KlTrajectory,
    LearningOrder, PhaseReport, PhaseSettings, PhaseTraces, SubclassifierTraces,
};
use crate::mlp::CurvePoint;
use crate::plot::{heatmap_svg, line_chart_svg, Series};
use crate::Label;

pub const TRACES_FILE: &str = "traces.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment1Traces {
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub schedule_phases: usize,
    pub boost: BoostSummary,
    pub phase: PhaseTraces,
    /// Difficulty of each evaluation example under the final network.
    pub difficulty: Vec<DifficultyScore>,
    pub curve: Vec<CurvePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment2Traces {
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub boost: BoostSummary,
    pub constrained: SubclassifierTraces,
    pub vanilla: SubclassifierTraces,
    pub constrained_final: Vec<Label>,
    pub vanilla_final: Vec<Label>,
    pub constrained_curve: Vec<CurvePoint>,
    pub vanilla_curve: Vec<CurvePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Traces {
    Experiment1(Experiment1Traces),
    Experiment2(Experiment2Traces),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment1Report {
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub boost: BoostSummary,
    pub final_training: Option<CurvePoint>,
    pub phase: PhaseReport,
    pub learning_order: LearningOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment2Report {
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub boost: BoostSummary,
    pub constrained_final_training: Option<CurvePoint>,
    pub vanilla_final_training: Option<CurvePoint>,
    pub correlation: CorrelationTrajectory,
    pub kl: KlTrajectory,
    /// The same statistics on the vanilla network, split into the same blocks.
    pub vanilla_correlation: CorrelationTrajectory,
    pub final_error: FinalErrorComparison,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Report {
    Experiment1(Experiment1Report),
    Experiment2(Experiment2Report),
}

pub fn experiment1_report(t: &Experiment1Traces) -> Result<Experiment1Report, ExperimentError> {
    let a = &t.config.analysis;
    let settings = PhaseSettings {
        phases: a.phases,
        threshold: a.threshold,
        trials: a.trials,
        seed: t.seeds.significance,
    };
    let phase = phase_report(&t.phase, t.schedule_phases, &settings).stage("report")?;
    let network: Vec<Vec<Label>> = t
        .phase
        .checkpoints
        .iter()
        .map(|c| c.trace.predictions.clone())
        .collect();
    let ensemble: Vec<Vec<Label>> = t
        .phase
        .stages
        .iter()
        .map(|g| g.predictions.clone())
        .collect();
    let learning_order =
        learning_order_curves(&network, &ensemble, &t.phase.labels, &t.difficulty, a.bins)
            .stage("report")?;
    Ok(Experiment1Report {
        config: t.config.clone(),
        seeds: t.seeds.clone(),
        boost: t.boost.clone(),
        final_training: t.curve.last().cloned(),
        phase,
        learning_order,
    })
}

pub fn experiment2_report(t: &Experiment2Traces) -> Result<Experiment2Report, ExperimentError> {
    let a = &t.config.analysis;
    let correlation = correlation_trajectories(&t.constrained, a.rematch).stage("report")?;
    let kl = error_kl_trajectories(&t.constrained, &correlation.matching, a.smoothing)
        .stage("report")?;
    let vanilla_correlation = correlation_trajectories(&t.vanilla, a.rematch).stage("report")?;
    let final_error = final_error_comparison(
        &t.constrained_final,
        &t.vanilla_final,
        &t.constrained.labels,
    )
    .stage("report")?;
    Ok(Experiment2Report {
        config: t.config.clone(),
        seeds: t.seeds.clone(),
        boost: t.boost.clone(),
        constrained_final_training: t.constrained_curve.last().cloned(),
        vanilla_final_training: t.vanilla_curve.last().cloned(),
        correlation,
        kl,
        vanilla_correlation,
        final_error,
    })
}

impl Traces {
    pub fn report(&self) -> Result<Report, ExperimentError> {
        Ok(match self {
            Traces::Experiment1(t) => Report::Experiment1(experiment1_report(t)?),
            Traces::Experiment2(t) => Report::Experiment2(experiment2_report(t)?),
        })
    }
}

const TOL: f64 = 1e-9;

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), ExperimentError> {
    if ok {
        Ok(())
    } else {
        Err(ExperimentError::Schema(what()))
    }
}

fn check_matrix(
    name: &str,
    m: &[Vec<f64>],
    rows: usize,
    cols: usize,
) -> Result<(), ExperimentError> {
    check(m.len() == rows, || {
        format!("{name}: {} rows, expected {rows}", m.len())
    })?;
    for (i, row) in m.iter().enumerate() {
        check(row.len() == cols, || {
            format!("{name}[{i}]: {} columns, expected {cols}", row.len())
        })?;
        for (j, v) in row.iter().enumerate() {
            check(v.is_finite() && *v >= 0.0, || {
                format!("{name}[{i}][{j}] = {v} is not a finite non-negative value")
            })?;
        }
    }
    Ok(())
}

fn check_prob(name: &str, v: f64) -> Result<(), ExperimentError> {
    check((0.0..=1.0).contains(&v), || {
        format!("{name} = {v} outside [0, 1]")
    })
}

fn check_corr(name: &str, v: f64) -> Result<(), ExperimentError> {
    check(v.is_finite() && v.abs() <= 1.0 + TOL, || {
        format!("{name} = {v} outside [-1, 1]")
    })
}

fn check_trajectory(
    name: &str,
    c: &CorrelationTrajectory,
    n: usize,
) -> Result<(), ExperimentError> {
    check(c.matched_corr.len() == n, || {
        format!("{name}.matched_corr has wrong length")
    })?;
    check(c.pairwise_corr.len() == n, || {
        format!("{name}.pairwise_corr has wrong length")
    })?;
    for &v in &c.matched_corr {
        check_corr(&format!("{name}.matched_corr"), v)?;
    }
    for v in c.pairwise_corr.iter().flatten() {
        check_corr(&format!("{name}.pairwise_corr"), *v)?;
    }
    for v in c.matched_trend.iter().chain(&c.pairwise_trend) {
        check_corr(&format!("{name} trend"), *v)?;
    }
    Ok(())
}

impl Report {
    /// Structural checks: matrix shapes, value ranges, ordering.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        match self {
            Report::Experiment1(r) => {
                let p = &r.phase;
                let (n, k) = (p.steps.len(), p.stages.len());
                check(n > 0 && k > 0, || "empty phase matrix".into())?;
                check(p.stages == (1..=k).collect::<Vec<_>>(), || {
                    "stages must be 1..=k".into()
                })?;
                check(p.checkpoint_phases.len() == n, || {
                    "checkpoint_phases has wrong length".into()
                })?;
                check(p.steps.windows(2).all(|w| w[0] < w[1]), || {
                    "steps not increasing".into()
                })?;
                check_matrix("cmi_f_given_g", &p.cmi_f_given_g, n, k)?;
                check_matrix("cmi_g_given_f", &p.cmi_g_given_f, n, k)?;
                check(p.f_accuracy.len() == n && p.g_accuracy.len() == k, || {
                    "accuracy lengths".into()
                })?;
                for &v in p.f_accuracy.iter().chain(&p.g_accuracy) {
                    check_prob("accuracy", v)?;
                }
                let sel = &p.selection.selected;
                check(sel.windows(2).all(|w| w[0].step < w[1].step), || {
                    "selected steps not increasing".into()
                })?;
                check(sel.len() <= p.phases, || {
                    "more selected phases than requested".into()
                })?;
                for s in &p.significance {
                    check_prob("p_value", s.record.p_value)?;
                    check(s.record.trials == p.settings.trials, || {
                        "trial count mismatch".into()
                    })?;
                    check(s.stage >= 1 && s.stage <= k, || {
                        format!("stage {} out of range", s.stage)
                    })?;
                }
                let lo = &r.learning_order;
                check(lo.bin_sizes.len() == lo.bins, || {
                    "bin_sizes has wrong length".into()
                })?;
                check(
                    lo.network.accuracy.len() == lo.bins && lo.ensemble.accuracy.len() == lo.bins,
                    || "learning-order curves have wrong bin count".into(),
                )?;
                Ok(())
            }
            Report::Experiment2(r) => {
                let n = r.correlation.steps.len();
                check(n >= 2, || "fewer than two checkpoints".into())?;
                check(r.correlation.steps.windows(2).all(|w| w[0] < w[1]), || {
                    "steps not increasing".into()
                })?;
                check_trajectory("correlation", &r.correlation, n)?;
                check_trajectory(
                    "vanilla_correlation",
                    &r.vanilla_correlation,
                    r.vanilla_correlation.steps.len(),
                )?;
                let kl = &r.kl;
                check(kl.steps == r.correlation.steps, || {
                    "kl steps differ from correlation steps".into()
                })?;
                for (name, m) in [
                    ("kl_f_h", &kl.kl_f_h),
                    ("kl_h_f", &kl.kl_h_f),
                    ("js_f_h", &kl.js_f_h),
                ] {
                    check_matrix(name, m, n, kl.pairs.len())?;
                }
                for v in kl
                    .mean_kl_f_h
                    .iter()
                    .chain(&kl.mean_kl_h_f)
                    .chain(kl.pairwise_kl.iter().flatten())
                {
                    check(v.is_finite() && *v >= 0.0, || {
                        format!("negative or non-finite KL {v}")
                    })?;
                }
                let f = &r.final_error;
                check_prob("constrained_error", f.constrained_error)?;
                check_prob("vanilla_error", f.vanilla_error)?;
                Ok(())
            }
        }
    }

    pub fn to_json_bytes(&self) -> Result<Vec<u8>, ExperimentError> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}

fn step_labels(steps: &[usize]) -> Vec<String> {
    steps.iter().map(|s| s.to_string()).collect()
}

/// Validates, then writes `report.json`, the CSV tables and the SVG plots.
pub fn write_report(run: &mut RunDir, report: &Report) -> Result<(), ExperimentError> {
    report.validate()?;
    run.write(REPORT_FILE, &report.to_json_bytes()?)?;
    match report {
        Report::Experiment1(r) => {
            let p = &r.phase;
            let rows = step_labels(&p.steps);
            let cols: Vec<String> = p.stages.iter().map(|b| format!("G{b}")).collect();
            for (name, m, title) in [
                ("cmi_f_given_g", &p.cmi_f_given_g, "I(F_t; Y | G_b) [bits]"),
                ("cmi_g_given_f", &p.cmi_g_given_f, "I(G_b; Y | F_t) [bits]"),
            ] {
                run.write(
                    &format!("{name}.csv"),
                    matrix_csv("step", &cols, &rows, m).as_bytes(),
                )?;
                let svg = heatmap_svg(title, m, &rows, &cols, "ensemble stage", "SGD step");
                run.write(&format!("plots/{name}.svg"), svg.as_bytes())?;
            }
            let acc: Vec<(String, Vec<(f64, f64)>)> = r
                .learning_order
                .network
                .accuracy
                .iter()
                .enumerate()
                .map(|(b, row)| {
                    let pts = p
                        .steps
                        .iter()
                        .zip(row)
                        .filter_map(|(&s, a)| a.map(|a| (s as f64, a)))
                        .collect();
                    (format!("bin {b}"), pts)
                })
                .collect();
            let series: Vec<Series> = acc
                .iter()
                .map(|(n, pts)| Series {
                    name: n,
                    points: pts.clone(),
                })
                .collect();
            let svg = line_chart_svg(
                "Network accuracy by difficulty bin",
                &series,
                "SGD step",
                "accuracy",
            );
            run.write("plots/learning_order.svg", svg.as_bytes())?;
        }
        Report::Experiment2(r) => {
            let c = &r.correlation;
            let vanilla_pair = |i: usize| {
                r.vanilla_correlation
                    .pairwise_corr
                    .get(i)
                    .copied()
                    .flatten()
            };
            let mut csv = String::from(
                "step,matched_corr,pairwise_corr,mean_kl_f_h,mean_kl_h_f,pairwise_kl,vanilla_matched_corr,vanilla_pairwise_corr\n",
            );
            for (i, s) in c.steps.iter().enumerate() {
                let cells = [
                    Some(c.matched_corr[i]),
                    c.pairwise_corr[i],
                    Some(r.kl.mean_kl_f_h[i]),
                    Some(r.kl.mean_kl_h_f[i]),
                    r.kl.pairwise_kl[i],
                    r.vanilla_correlation.matched_corr.get(i).copied(),
                    vanilla_pair(i),
                ];
                csv.push_str(&s.to_string());
                for v in cells {
                    csv.push(',');
                    csv.push_str(&format_cell(v));
                }
                csv.push('\n');
            }
            run.write("trajectories.csv", csv.as_bytes())?;
            let pts = |v: &[Option<f64>]| -> Vec<(f64, f64)> {
                c.steps
                    .iter()
                    .zip(v)
                    .filter_map(|(&s, y)| y.map(|y| (s as f64, y)))
                    .collect()
            };
            let some = |v: &[f64]| -> Vec<Option<f64>> { v.iter().copied().map(Some).collect() };
            let corr = [
                Series {
                    name: "matched corr(f_j, h_j)",
                    points: pts(&some(&c.matched_corr)),
                },
                Series {
                    name: "pairwise corr(f_a, f_b)",
                    points: pts(&c.pairwise_corr),
                },
                Series {
                    name: "vanilla pairwise",
                    points: pts(&r.vanilla_correlation.pairwise_corr),
                },
            ];
            let svg = line_chart_svg(
                "Sub-classifier correlation",
                &corr,
                "SGD step",
                "correlation",
            );
            run.write("plots/correlation.svg", svg.as_bytes())?;
            let kl = [
                Series {
                    name: "KL(f_j || h_j)",
                    points: pts(&some(&r.kl.mean_kl_f_h)),
                },
                Series {
                    name: "KL(h_j || f_j)",
                    points: pts(&some(&r.kl.mean_kl_h_f)),
                },
                Series {
                    name: "pairwise KL",
                    points: pts(&r.kl.pairwise_kl),
                },
            ];
            let svg = line_chart_svg("Error-distribution divergence", &kl, "SGD step", "bits");
            run.write("plots/kl.svg", svg.as_bytes())?;
        }
    }
    Ok(())
}

pub fn read_traces(dir: &Path) -> Result<Traces, ExperimentError> {
    let p = dir.join(TRACES_FILE);
    let bytes = std::fs::read(&p).map_err(io_err(&p))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Rebuilds the report of a finished run from its `traces.json` alone and
/// rewrites the report files. The manifest for this goes to
/// `report.manifest.json`.
pub fn regenerate_report(dir: &Path) -> Result<(Manifest, Report), ExperimentError> {
    let traces = read_traces(dir)?;
    let report = traces.report()?;
    let mut run = RunDir::create(dir, "report")?.with_manifest_name("report.manifest.json");
    match write_report(&mut run, &report) {
        Ok(()) => {
            run.stage_done("report");
            Ok((run.finish(None)?, report))
        }
        Err(e) => {
            run.finish(Some(&e))?;
            Err(e)
        }
    }
}

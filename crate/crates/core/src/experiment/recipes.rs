use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{DataSource, ExperimentConfig, ScheduleMode};
use super::output::{Manifest, RunDir};
use super::report::{
    experiment1_report, experiment2_report, write_report, Experiment1Report, Experiment1Traces,
    Experiment2Report, Experiment2Traces, Report, Traces, TRACES_FILE,
};
use super::{ExperimentError, StageExt};
use crate::analysis::{difficulty_scores, phase_traces, subclassifier_traces};
use crate::boost::{run_adaboost, write_ensemble, BoostEnsemble, StopReason, Stump};
use crate::data::{
    gen_sinusoid, gen_xor_clusters, load_cifar10_binary, split, standardize, write_dataset,
    ClassPartition, Dataset, SinusoidConfig, XorClusterConfig,
};
use crate::mlp::{
    checkpoint_to_bytes, loss_curve_csv, train, CheckpointSeries, MlpModel, PhaseSchedule,
    Sampling, SgdSettings, SubnetworkSpec, Trainer,
};
use crate::rng::derive_seed;

/// Every seed a run uses, derived from the one in the config.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub base: u64,
    pub data: u64,
    pub split: u64,
    pub init: u64,
    pub sgd: u64,
    pub significance: u64,
}

impl Seeds {
    pub fn from_base(base: u64) -> Self {
        Self {
            base,
            data: derive_seed(base, 0),
            split: derive_seed(base, 1),
            init: derive_seed(base, 2),
            sgd: derive_seed(base, 3),
            significance: derive_seed(base, 4),
        }
    }
}

/// Train and test sets as the config describes them.
pub fn load_data(
    cfg: &ExperimentConfig,
    seeds: &Seeds,
) -> Result<(Dataset, Dataset), ExperimentError> {
    let frac = cfg.data.train_fraction;
    let (train, test) = match &cfg.data.source {
        DataSource::XorClusters {
            n,
            d,
            cluster_separation,
            cluster_stddev,
            label_noise,
        } => {
            let ds = gen_xor_clusters(&XorClusterConfig {
                n: *n,
                d: *d,
                cluster_separation: *cluster_separation,
                cluster_stddev: *cluster_stddev,
                label_noise: *label_noise,
                seed: seeds.data,
            })
            .stage("data")?;
            split(&ds, frac, seeds.split).stage("data")?
        }
        DataSource::Sinusoid {
            n,
            d,
            signal_dims,
            frequency,
            label_noise,
        } => {
            let ds = gen_sinusoid(&SinusoidConfig {
                n: *n,
                d: *d,
                signal_dims: *signal_dims,
                frequency: *frequency,
                label_noise: *label_noise,
                seed: seeds.data,
            })
            .stage("data")?;
            split(&ds, frac, seeds.split).stage("data")?
        }
        DataSource::Cifar10 {
            files,
            test_files,
            positive_classes,
        } => {
            let partition = positive_classes
                .clone()
                .map_or_else(ClassPartition::default, |positive| ClassPartition {
                    positive,
                });
            let ds = load_cifar10_binary(files, &partition).stage("data")?;
            if test_files.is_empty() {
                split(&ds, frac, seeds.split).stage("data")?
            } else {
                (
                    ds,
                    load_cifar10_binary(test_files, &partition).stage("data")?,
                )
            }
        }
    };
    if cfg.data.standardize {
        let (a, b, _) = standardize(&train, &test).stage("data")?;
        Ok((a, b))
    } else {
        Ok((train, test))
    }
}

pub fn sgd_settings(cfg: &ExperimentConfig) -> SgdSettings {
    SgdSettings {
        learning_rate: cfg.mlp.learning_rate,
        batch_size: cfg.mlp.batch_size,
        loss: cfg.mlp.loss,
        checkpoint_every: cfg.mlp.checkpoint_every,
        freeze_output: cfg.mlp.freeze_output,
    }
}

fn phase_schedule(
    cfg: &ExperimentConfig,
    ens: &BoostEnsemble,
) -> Result<PhaseSchedule, ExperimentError> {
    let phases = cfg.schedule_phases();
    let per = cfg.mlp.steps_per_phase;
    match cfg.mlp.schedule {
        ScheduleMode::BoostingAligned => {
            PhaseSchedule::boosting_aligned(ens, phases, per, sgd_settings(cfg)).stage("train")
        }
        ScheduleMode::Uniform => Ok(PhaseSchedule {
            boundaries: (0..=phases).map(|i| i * per).collect(),
            phases: vec![Sampling::Uniform; phases],
            sgd: sgd_settings(cfg),
        }),
    }
}

/// Adaboost results in report form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostSummary {
    pub requested_rounds: usize,
    pub rounds: usize,
    pub stumps: Vec<Stump>,
    pub alphas: Vec<f64>,
    pub round_errors: Vec<f64>,
    pub capped_rounds: Vec<bool>,
    pub stop_reason: Option<StopReason>,
    /// Staged errors of `G_1 … G_k`.
    pub train_error: Vec<f64>,
    pub test_error: Vec<f64>,
    pub training_error_bound: Vec<f64>,
}

pub fn boost_summary(
    ens: &BoostEnsemble,
    train: &Dataset,
    test: &Dataset,
) -> Result<BoostSummary, ExperimentError> {
    let stages = 1..=ens.rounds();
    Ok(BoostSummary {
        requested_rounds: ens.requested_rounds(),
        rounds: ens.rounds(),
        stumps: ens.stumps().to_vec(),
        alphas: ens.alphas().to_vec(),
        round_errors: ens.round_errors().to_vec(),
        capped_rounds: ens.capped_rounds().to_vec(),
        stop_reason: ens.stop_reason().cloned(),
        train_error: stages
            .clone()
            .map(|s| ens.staged_error(s, train))
            .collect::<Result<_, _>>()
            .stage("boost")?,
        test_error: stages
            .clone()
            .map(|s| ens.staged_error(s, test))
            .collect::<Result<_, _>>()
            .stage("boost")?,
        training_error_bound: stages
            .map(|s| ens.training_error_bound(s))
            .collect::<Result<_, _>>()
            .stage("boost")?,
    })
}

/// Creates the run directory, writes the resolved config, runs `body` and
/// always leaves a manifest behind.
fn with_run<T>(
    cfg: &ExperimentConfig,
    out: &Path,
    command: &str,
    body: impl FnOnce(&mut RunDir, &Seeds) -> Result<T, ExperimentError>,
) -> Result<(Manifest, T), ExperimentError> {
    let mut run = RunDir::create(out, command)?;
    let seeds = Seeds::from_base(cfg.seed);
    let result = run
        .write_json("config.resolved.json", cfg)
        .and_then(|()| body(&mut run, &seeds));
    match result {
        Ok(v) => Ok((run.finish(None)?, v)),
        Err(e) => {
            run.finish(Some(&e))?;
            Err(e)
        }
    }
}

fn stage_data(
    cfg: &ExperimentConfig,
    seeds: &Seeds,
    run: &mut RunDir,
) -> Result<(Dataset, Dataset), ExperimentError> {
    let (train, test) = load_data(cfg, seeds)?;
    run.ensure_dir("data")?;
    for (name, ds) in [("train", &train), ("test", &test)] {
        write_dataset(ds, &run.path(&format!("data/{name}.csv"))).stage("data")?;
        run.record(&format!("data/{name}.csv"))?;
        run.record(&format!("data/{name}.meta.json"))?;
    }
    run.stage_done("data");
    Ok((train, test))
}

fn stage_boost(
    cfg: &ExperimentConfig,
    train: &Dataset,
    test: &Dataset,
    run: &mut RunDir,
) -> Result<(BoostEnsemble, BoostSummary), ExperimentError> {
    let ens = run_adaboost(train, cfg.boost.rounds).stage("boost")?;
    run.ensure_dir("boost")?;
    write_ensemble(&ens, &run.path("boost/ensemble.json")).stage("boost")?;
    run.record("boost/ensemble.json")?;
    run.record("boost/ensemble.dist.bin")?;
    let summary = boost_summary(&ens, train, test)?;
    run.write_json("boost/summary.json", &summary)?;
    run.stage_done("boost");
    Ok((ens, summary))
}

fn write_series(
    run: &mut RunDir,
    dir: &str,
    series: &CheckpointSeries,
) -> Result<(), ExperimentError> {
    for c in &series.checkpoints {
        let bytes = checkpoint_to_bytes(c, series.seed).stage("train")?;
        run.write(&format!("{dir}/step_{:06}.ckpt", c.step), &bytes)?;
    }
    let curve = if dir == "checkpoints" {
        "loss_curve.csv".to_string()
    } else {
        format!("{dir}/loss_curve.csv")
    };
    run.write(&curve, loss_curve_csv(series).as_bytes())
}

fn init_model(
    cfg: &ExperimentConfig,
    train: &Dataset,
    seeds: &Seeds,
) -> Result<MlpModel, ExperimentError> {
    MlpModel::init(train.dim(), cfg.mlp.hidden, seeds.init).stage("train")
}

fn stage_train(
    cfg: &ExperimentConfig,
    seeds: &Seeds,
    train_set: &Dataset,
    test: &Dataset,
    ens: &BoostEnsemble,
    run: &mut RunDir,
) -> Result<(PhaseSchedule, CheckpointSeries), ExperimentError> {
    let schedule = phase_schedule(cfg, ens)?;
    let model = init_model(cfg, train_set, seeds)?;
    let series = train(model, train_set, Some(test), &schedule, seeds.sgd).stage("train")?;
    write_series(run, "checkpoints", &series)?;
    run.stage_done("train");
    Ok((schedule, series))
}

/// Writes `data/`.
pub fn run_gen(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest, ExperimentError> {
    with_run(cfg, out, "gen", |run, seeds| {
        stage_data(cfg, seeds, run).map(|_| ())
    })
    .map(|(m, ())| m)
}

/// Writes `data/` and `boost/`.
pub fn run_boost(
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<(Manifest, BoostSummary), ExperimentError> {
    with_run(cfg, out, "boost", |run, seeds| {
        let (train, test) = stage_data(cfg, seeds, run)?;
        Ok(stage_boost(cfg, &train, &test, run)?.1)
    })
}

/// Writes `data/`, `boost/`, `checkpoints/` and `loss_curve.csv` under the
/// configured phase schedule.
pub fn run_train(
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<(Manifest, CheckpointSeries), ExperimentError> {
    with_run(cfg, out, "train", |run, seeds| {
        let (train, test) = stage_data(cfg, seeds, run)?;
        let (ens, _) = stage_boost(cfg, &train, &test, run)?;
        Ok(stage_train(cfg, seeds, &train, &test, &ens, run)?.1)
    })
}

/// Reduces an experiment-1 run to what its report needs.
pub fn experiment1_traces(
    cfg: &ExperimentConfig,
    seeds: &Seeds,
    test: &Dataset,
    ens: &BoostEnsemble,
    boost: BoostSummary,
    schedule: &PhaseSchedule,
    series: &CheckpointSeries,
) -> Result<Experiment1Traces, ExperimentError> {
    let phase = phase_traces(series, ens, test).stage("traces")?;
    let last = series.last().ok_or_else(|| ExperimentError::Stage {
        stage: "traces".into(),
        message: "no checkpoints".into(),
    })?;
    let difficulty =
        difficulty_scores(&last.model, test, None, cfg.analysis.bins).stage("traces")?;
    Ok(Experiment1Traces {
        config: cfg.clone(),
        seeds: seeds.clone(),
        schedule_phases: schedule.phase_count(),
        boost,
        phase,
        difficulty,
        curve: series.curve.clone(),
    })
}

/// Adaboost, network under the phase schedule, CMI phase analysis.
pub fn run_experiment1(
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<(Manifest, Experiment1Report), ExperimentError> {
    with_run(cfg, out, "experiment1", |run, seeds| {
        let (train, test) = stage_data(cfg, seeds, run)?;
        let (ens, boost) = stage_boost(cfg, &train, &test, run)?;
        let (schedule, series) = stage_train(cfg, seeds, &train, &test, &ens, run)?;
        let traces = experiment1_traces(cfg, seeds, &test, &ens, boost, &schedule, &series)?;
        run.write_json(TRACES_FILE, &Traces::Experiment1(traces.clone()))?;
        run.stage_done("traces");
        let report = experiment1_report(&traces)?;
        write_report(run, &Report::Experiment1(report.clone()))?;
        run.stage_done("report");
        Ok(report)
    })
}

/// Reduces the constrained and vanilla runs of experiment 2.
#[allow(clippy::too_many_arguments)]
pub fn experiment2_traces(
    cfg: &ExperimentConfig,
    seeds: &Seeds,
    test: &Dataset,
    ens: &BoostEnsemble,
    boost: BoostSummary,
    specs: &[SubnetworkSpec],
    constrained: &CheckpointSeries,
    vanilla: &CheckpointSeries,
) -> Result<Experiment2Traces, ExperimentError> {
    let mode = cfg.analysis.mode;
    let final_pred = |s: &CheckpointSeries| -> Result<Vec<crate::Label>, ExperimentError> {
        let last = s.last().ok_or_else(|| ExperimentError::Stage {
            stage: "traces".into(),
            message: "no checkpoints".into(),
        })?;
        last.model.predictions(test).stage("traces")
    };
    Ok(Experiment2Traces {
        config: cfg.clone(),
        seeds: seeds.clone(),
        boost,
        constrained: subclassifier_traces(constrained, ens, test, mode, specs).stage("traces")?,
        vanilla: subclassifier_traces(vanilla, ens, test, mode, specs).stage("traces")?,
        constrained_final: final_pred(constrained)?,
        vanilla_final: final_pred(vanilla)?,
        constrained_curve: constrained.curve.clone(),
        vanilla_curve: vanilla.curve.clone(),
    })
}

/// Masked sub-network training against the boosting rounds, plus a vanilla
/// run from the same initialization and seed.
pub fn run_experiment2(
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<(Manifest, Experiment2Report), ExperimentError> {
    with_run(cfg, out, "experiment2", |run, seeds| {
        let (train_set, test) = stage_data(cfg, seeds, run)?;
        let (ens, boost) = stage_boost(cfg, &train_set, &test, run)?;
        let specs =
            SubnetworkSpec::disjoint_blocks(cfg.mlp.hidden, cfg.mlp.subnetworks).stage("train")?;
        let schedule = PhaseSchedule::uniform(cfg.mlp.subnet_steps, sgd_settings(cfg));
        let model = init_model(cfg, &train_set, seeds)?;
        let constrained = Trainer::with_subnetworks(
            model.clone(),
            &train_set,
            Some(&test),
            &specs,
            cfg.mlp.overlap_cap,
            Some(&ens),
            &schedule,
            seeds.sgd,
        )
        .stage("train")?
        .with_objective(cfg.mlp.subnet_objective)
        .run()
        .stage("train")?;
        write_series(run, "checkpoints", &constrained)?;
        let vanilla = train(model, &train_set, Some(&test), &schedule, seeds.sgd).stage("train")?;
        write_series(run, "vanilla", &vanilla)?;
        run.stage_done("train");
        let traces = experiment2_traces(
            cfg,
            seeds,
            &test,
            &ens,
            boost,
            &specs,
            &constrained,
            &vanilla,
        )?;
        run.write_json(TRACES_FILE, &Traces::Experiment2(traces.clone()))?;
        run.stage_done("traces");
        let report = experiment2_report(&traces)?;
        write_report(run, &Report::Experiment2(report.clone()))?;
        run.stage_done("report");
        Ok(report)
    })
}

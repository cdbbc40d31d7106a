use std::path::PathBuf;

use phaselab::experiment::{
    read_traces, run_experiment1, run_experiment2, Experiment1Report, Experiment2Report,
    ExperimentConfig, Report, Traces,
};
use serde_json::{json, Value};

fn config(name: &str) -> ExperimentConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    ExperimentConfig::from_path(&p).unwrap()
}

fn small(mut cfg: ExperimentConfig) -> ExperimentConfig {
    if let phaselab::experiment::DataSource::XorClusters { n, .. } = &mut cfg.data.source {
        *n = 800;
    }
    cfg.mlp.steps_per_phase = 40;
    cfg.mlp.subnet_steps = 400;
    cfg
}

/// Numbers equal within 1e-9, everything else exactly.
fn assert_close(path: &str, got: &Value, want: &Value) {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            assert!(
                (a - b).abs() <= 1e-9 * b.abs().max(1.0),
                "{path}: {a} != {b}"
            );
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "{path}: length");
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                assert_close(&format!("{path}[{i}]"), x, y);
            }
        }
        (Value::Object(a), Value::Object(b)) => {
            assert_eq!(
                a.keys().collect::<Vec<_>>(),
                b.keys().collect::<Vec<_>>(),
                "{path}: keys"
            );
            for (k, x) in a {
                assert_close(&format!("{path}.{k}"), x, &b[k]);
            }
        }
        _ => assert_eq!(got, want, "{path}"),
    }
}

/// Compares against `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
fn golden(name: &str, got: &Value) {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(&p, serde_json::to_string_pretty(got).unwrap() + "\n").unwrap();
        return;
    }
    let want: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_close(name, got, &want);
}

fn summary1(r: &Experiment1Report) -> Value {
    let p = &r.phase;
    json!({
        "boost_round_errors": r.boost.round_errors,
        "boost_test_error": r.boost.test_error,
        "final_f_accuracy": p.f_accuracy.last(),
        "selected_steps": p.selection.selected.iter().map(|s| s.step).collect::<Vec<_>>(),
        "selected_objective": p.selection.selected.iter().map(|s| s.objective).collect::<Vec<_>>(),
        "significance": p.significance.iter().map(|s| json!([
            s.phase, s.stage, s.step, s.record.observed, s.record.baseline_mean, s.record.p_value
        ])).collect::<Vec<_>>(),
        "bin_sizes": r.learning_order.bin_sizes,
        "network_mastery": r.learning_order.network.mastery,
        "ensemble_mastery": r.learning_order.ensemble.mastery,
        "rank_agreement": r.learning_order.rank_agreement,
    })
}

fn summary2(r: &Experiment2Report) -> Value {
    let c = &r.correlation;
    let ends = |v: &[f64]| json!([v.first(), v.last()]);
    json!({
        "pairs": c.matching.pairs,
        "matched_corr": ends(&c.matched_corr),
        "pairwise_corr": [c.pairwise_corr.first(), c.pairwise_corr.last()],
        "matched_trend": c.matched_trend,
        "pairwise_trend": c.pairwise_trend,
        "mean_kl_f_h": ends(&r.kl.mean_kl_f_h),
        "mean_kl_h_f": ends(&r.kl.mean_kl_h_f),
        "matched_drop": r.kl.matched_drop,
        "pairwise_rise": r.kl.pairwise_rise,
        "vanilla_pairwise_corr": [r.vanilla_correlation.pairwise_corr.first(), r.vanilla_correlation.pairwise_corr.last()],
        "final_error": [r.final_error.constrained_error, r.final_error.vanilla_error, r.final_error.gap],
    })
}

#[test]
fn pinned_experiment1_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let (_, r) = run_experiment1(&config("xor_experiment1.toml"), dir.path()).unwrap();
    golden("experiment1_seed0.json", &summary1(&r));
}

#[test]
fn pinned_experiment2_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let (_, r) = run_experiment2(&config("xor_experiment2.toml"), dir.path()).unwrap();
    golden("experiment2_seed0.json", &summary2(&r));
}

#[test]
fn experiment1_outputs_pass_validation_and_manifest_hashes_match() {
    let dir = tempfile::tempdir().unwrap();
    let (m, r) = run_experiment1(&small(config("xor_experiment1.toml")), dir.path()).unwrap();
    assert_eq!(
        m.stages_completed,
        ["data", "boost", "train", "traces", "report"]
    );
    assert!(m.failure.is_none());
    for (rel, hash) in &m.files {
        let bytes = std::fs::read(dir.path().join(rel)).unwrap();
        assert_eq!(&phaselab::experiment::sha256_hex(&bytes), hash, "{rel}");
    }
    let on_disk: Report =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    on_disk.validate().unwrap();
    assert_eq!(
        on_disk.to_json_bytes().unwrap(),
        Report::Experiment1(r.clone()).to_json_bytes().unwrap()
    );
    // every CMI cell is reproducible from the persisted traces alone
    let Traces::Experiment1(t) = read_traces(dir.path()).unwrap() else {
        panic!("wrong kind")
    };
    let y = &t.phase.labels;
    for (a, c) in t.phase.checkpoints.iter().enumerate() {
        for (b, g) in t.phase.stages.iter().enumerate() {
            let v =
                phaselab::info::conditional_mi(&c.trace.predictions, y, &g.predictions).unwrap();
            assert_eq!(v, r.phase.cmi_f_given_g[a][b]);
        }
    }
    for f in [
        "cmi_f_given_g.csv",
        "cmi_g_given_f.csv",
        "plots/cmi_f_given_g.svg",
        "plots/learning_order.svg",
        "loss_curve.csv",
    ] {
        assert!(m.files.contains_key(f), "{f}");
    }
}

#[test]
fn experiment2_outputs_pass_validation() {
    let dir = tempfile::tempdir().unwrap();
    let (m, r) = run_experiment2(&small(config("xor_experiment2.toml")), dir.path()).unwrap();
    assert!(m.files.contains_key("trajectories.csv") && m.files.contains_key("plots/kl.svg"));
    assert!(m.files.keys().any(|k| k.starts_with("vanilla/")));
    Report::Experiment2(r.clone()).validate().unwrap();
    assert_eq!(r.kl.pairs, r.correlation.matching.pairs);
    assert_eq!(r.correlation.steps.first(), Some(&0));
}

#[test]
fn validation_rejects_tampered_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (_, r) = run_experiment1(&small(config("xor_experiment1.toml")), dir.path()).unwrap();
    let mut bad = r.clone();
    bad.phase.cmi_f_given_g[0][0] = -0.1;
    assert!(Report::Experiment1(bad).validate().is_err());
    let mut bad = r.clone();
    bad.phase.cmi_g_given_f.pop();
    assert!(Report::Experiment1(bad).validate().is_err());
    let mut bad = r;
    bad.phase.f_accuracy[0] = 1.5;
    assert!(Report::Experiment1(bad).validate().is_err());
}

#[test]
fn uniform_schedule_control_keeps_phase_boundaries() {
    let aligned = small(config("xor_experiment1.toml"));
    let mut uniform = aligned.clone();
    uniform.mlp.schedule = phaselab::experiment::ScheduleMode::Uniform;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (_, ra) = run_experiment1(&aligned, a.path()).unwrap();
    let (_, rb) = run_experiment1(&uniform, b.path()).unwrap();
    assert_eq!(ra.phase.steps, rb.phase.steps);
    assert_eq!(ra.phase.checkpoint_phases, rb.phase.checkpoint_phases);
    assert_eq!(
        *rb.phase.checkpoint_phases.last().unwrap(),
        uniform.schedule_phases()
    );
    assert_ne!(ra.phase.f_accuracy, rb.phase.f_accuracy);
}

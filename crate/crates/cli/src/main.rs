use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use phaselab::analysis::PhaseDirection;
use phaselab::boost::{conjecture_map, vc_bound_boost, vc_bound_mlp};
use phaselab::experiment::{
    regenerate_report, run_boost, run_experiment1, run_experiment2, run_gen, run_train,
    ExperimentConfig, Manifest, Report,
};

#[derive(Parser)]
#[command(
    name = "phaselab",
    version,
    about = "Boosting / neural network co-training experiments"
)]
struct Cli {
    /// Cap on worker threads for the parallel analysis steps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config, TOML or JSON.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or load the datasets and write train/test splits.
    Gen(RunArgs),
    /// Run Adaboost on the training split.
    Boost(RunArgs),
    /// Train the network under the configured phase schedule.
    Train(RunArgs),
    /// Phase-separation experiment: CMI matrices, phase selection, significance.
    Experiment1(RunArgs),
    /// Sub-network experiment: correlation and error-KL trajectories.
    Experiment2(RunArgs),
    /// VC bound tables.
    Vc {
        /// VC dimension of the base class.
        #[arg(long, default_value_t = 3)]
        d_base: u64,
        /// Largest number of boosting rounds in the table.
        #[arg(long, default_value_t = 5)]
        k_max: u64,
        /// Network units, for the network bound orders.
        #[arg(long, requires = "connections")]
        units: Option<u64>,
        /// Network connections, for the network bound orders.
        #[arg(long, requires = "units")]
        connections: Option<u64>,
        /// Smallest k whose boosting bound reaches this VC dimension.
        #[arg(long)]
        target: Option<f64>,
        /// Also write the table as CSV into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild report files of a finished experiment from its traces.
    Report {
        /// Run directory containing traces.json.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn done(m: &Manifest, out: &Path) {
    println!(
        "{}: {} ({} files) -> {}",
        m.command,
        m.stages_completed.join(", "),
        m.files.len(),
        out.display()
    );
}

fn summarize(report: &Report) {
    match report {
        Report::Experiment1(r) => {
            let p = &r.phase;
            println!(
                "phases selected: {}/{}",
                p.selection.selected.len(),
                p.phases
            );
            if let Some(d) = &p.selection.diagnostic {
                println!("  note: {d}");
            }
            for s in &p.significance {
                let arrow = match s.direction {
                    PhaseDirection::Forward => format!("I(F_{};Y|G_{})", s.phase, s.stage),
                    PhaseDirection::Reverse => format!("I(G_{};Y|F)", s.stage),
                };
                println!(
                    "  {arrow} at step {}: {:.4} bits, baseline {:.4} ± {:.4}, p = {:.3}",
                    s.step,
                    s.record.observed,
                    s.record.baseline_mean,
                    s.record.baseline_stddev,
                    s.record.p_value
                );
            }
        }
        Report::Experiment2(r) => {
            let c = &r.correlation;
            let first_last = |v: &[Option<f64>]| match (
                v.first().copied().flatten(),
                v.last().copied().flatten(),
            ) {
                (Some(a), Some(b)) => format!("{a:.4} -> {b:.4}"),
                _ => "n/a".into(),
            };
            let matched: Vec<Option<f64>> = c.matched_corr.iter().copied().map(Some).collect();
            let kl: Vec<Option<f64>> = r.kl.mean_kl_f_h.iter().copied().map(Some).collect();
            println!("matched corr(f_j, h_j): {}", first_last(&matched));
            println!("pairwise corr(f_a, f_b): {}", first_last(&c.pairwise_corr));
            println!("KL(errors f_j || errors h_j): {}", first_last(&kl));
            println!(
                "final test error: constrained {:.4}, vanilla {:.4}, gap {:+.4}",
                r.final_error.constrained_error, r.final_error.vanilla_error, r.final_error.gap
            );
        }
    }
}

fn vc_table(d_base: u64, k_max: u64) -> Result<String> {
    if k_max == 0 {
        bail!("--k-max must be >= 1");
    }
    let mut csv = String::from("k,d_k\n");
    for k in 1..=k_max {
        csv.push_str(&format!("{k},{:.6}\n", vc_bound_boost(d_base, k)?));
    }
    Ok(csv)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Gen(a) => {
            let cfg = load(&a)?;
            done(&run_gen(&cfg, &cfg.out)?, &cfg.out);
        }
        Command::Boost(a) => {
            let cfg = load(&a)?;
            let (m, s) = run_boost(&cfg, &cfg.out)?;
            done(&m, &cfg.out);
            for (i, (e, b)) in s
                .train_error
                .iter()
                .zip(&s.training_error_bound)
                .enumerate()
            {
                println!(
                    "  G_{}: train error {e:.4} (bound {b:.4}), test error {:.4}",
                    i + 1,
                    s.test_error[i]
                );
            }
        }
        Command::Train(a) => {
            let cfg = load(&a)?;
            let (m, series) = run_train(&cfg, &cfg.out)?;
            done(&m, &cfg.out);
            if let Some(p) = series.curve.last() {
                println!(
                    "  step {}: train loss {:.4}, train acc {:.4}",
                    p.step, p.train_loss, p.train_acc
                );
            }
        }
        Command::Experiment1(a) => {
            let cfg = load(&a)?;
            let (m, r) = run_experiment1(&cfg, &cfg.out)?;
            done(&m, &cfg.out);
            summarize(&Report::Experiment1(r));
        }
        Command::Experiment2(a) => {
            let cfg = load(&a)?;
            let (m, r) = run_experiment2(&cfg, &cfg.out)?;
            done(&m, &cfg.out);
            summarize(&Report::Experiment2(r));
        }
        Command::Vc {
            d_base,
            k_max,
            units,
            connections,
            target,
            out,
        } => {
            let csv = vc_table(d_base, k_max)?;
            print!("{csv}");
            if let (Some(v), Some(e)) = (units, connections) {
                let o = vc_bound_mlp(v, e)?;
                println!(
                    "network V={v} E={e}: order {:.3} .. {:.3} ({})",
                    o.order_lower, o.order_upper, o.note
                );
            }
            if let Some(t) = target {
                println!("target {t}: k = {}", conjecture_map(t, d_base)?);
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                let p = dir.join("vc.csv");
                std::fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::Report { out } => {
            let (m, r) = regenerate_report(&out)?;
            done(&m, &out);
            summarize(&r);
        }
    }
    Ok(())
}

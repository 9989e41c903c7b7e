//! `cdm-lab`: run experiment grids and plot their CSVs.

mod plot;
mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use cdm_core::harness::{
    run_ablation, run_anytime, run_distance_pcc, run_sweep, run_weight_analysis, summarize, write_csv, write_sidecar,
    Experiment, ExperimentConfig,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cdm-lab",
    version,
    about = "Collective decision-making under biased expert advice"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scaled reward against distance for every algorithm.
    Sweep(RunArgs),
    /// Full panels against the top fraction of experts.
    Ablation(RunArgs),
    /// Average reward per timestep and crossover steps.
    Anytime(RunArgs),
    /// Expert weights against expected reward.
    Weights(RunArgs),
    /// Value correlation against scaled distance for random bandit pairs.
    Pcc(RunArgs),
    /// Render a result CSV as SVG.
    Plot(PlotArgs),
    /// Check core invariants on tiny instances.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key = value settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "CDM_LAB_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Comma-separated, e.g. wmv,metacmab.
    #[arg(long)]
    algorithms: Option<String>,
    /// Comma-separated distances; fractions such as 1/6 are accepted.
    #[arg(long, allow_hyphen_values = true)]
    delta_grid: Option<String>,
    #[arg(long)]
    arms: Option<String>,
    #[arg(long)]
    experts: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    /// none, hindsight or noisy:ETA.
    #[arg(long)]
    confidence: Option<String>,
    /// Extra key=value settings applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct PlotArgs {
    csv: PathBuf,
    /// Output SVG path; defaults to the CSV path with an .svg extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    force: bool,
}

fn resolve(experiment: Experiment, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::new(experiment);
    if let Some(path) = &args.config {
        c.apply_file(path)
            .with_context(|| format!("reading config {}", path.display()))?;
    }
    let flags = [
        ("algorithms", &args.algorithms),
        ("delta_grid", &args.delta_grid),
        ("arms", &args.arms),
        ("experts", &args.experts),
        ("runs", &args.runs),
        ("confidence", &args.confidence),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            c.set(key, v).with_context(|| format!("--{}", key.replace('_', "-")))?;
        }
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set {kv}: expected KEY=VALUE"))?;
        c.set(k, v).with_context(|| format!("--set {kv}"))?;
    }
    if let Some(seed) = args.seed {
        c.seed = seed;
    }
    c.validate()?;
    Ok(c)
}

fn outputs_for(experiment: Experiment) -> Vec<String> {
    let name = experiment.name();
    match experiment {
        Experiment::Sweep | Experiment::Ablation => vec![format!("{name}.csv"), format!("{name}_summary.csv")],
        Experiment::Anytime => vec!["anytime.csv".into(), "anytime_crossover.csv".into()],
        _ => vec![format!("{name}.csv")],
    }
}

fn check_targets(dir: &Path, files: &[String], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    for f in files {
        let p = dir.join(f);
        if p.exists() {
            bail!("{} exists; pass --force to overwrite", p.display());
        }
    }
    Ok(())
}

fn run_experiment(experiment: Experiment, args: &RunArgs) -> Result<()> {
    let config = resolve(experiment, args)?;
    let outputs = outputs_for(experiment);
    let sidecar = format!("{}.config.json", experiment.name());
    let mut all = outputs.clone();
    all.push(sidecar.clone());
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    check_targets(&args.out, &all, args.force)?;

    let path = |i: usize| args.out.join(&outputs[i]);
    match experiment {
        Experiment::Sweep | Experiment::Ablation => {
            let rows = if experiment == Experiment::Sweep {
                run_sweep(&config, args.jobs)?
            } else {
                run_ablation(&config, args.jobs)?
            };
            write_csv(&path(0), &rows)?;
            write_csv(&path(1), &summarize(&rows))?;
        }
        Experiment::Anytime => {
            let (curves, crossovers) = run_anytime(&config, args.jobs)?;
            write_csv(&path(0), &curves)?;
            write_csv(&path(1), &crossovers)?;
        }
        Experiment::Weights => write_csv(&path(0), &run_weight_analysis(&config, args.jobs)?)?,
        Experiment::Pcc => write_csv(&path(0), &run_distance_pcc(&config, args.jobs)?)?,
    }
    write_sidecar(&args.out.join(&sidecar), &config, &outputs)?;
    for f in &all {
        println!("{}", args.out.join(f).display());
    }
    Ok(())
}

fn run_plot(args: &PlotArgs) -> Result<()> {
    let out = args.out.clone().unwrap_or_else(|| args.csv.with_extension("svg"));
    if out.exists() && !args.force {
        bail!("{} exists; pass --force to overwrite", out.display());
    }
    plot::plot_file(&args.csv, &out)?;
    println!("{}", out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep(a) => run_experiment(Experiment::Sweep, &a),
        Command::Ablation(a) => run_experiment(Experiment::Ablation, &a),
        Command::Anytime(a) => run_experiment(Experiment::Anytime, &a),
        Command::Weights(a) => run_experiment(Experiment::Weights, &a),
        Command::Pcc(a) => run_experiment(Experiment::Pcc, &a),
        Command::Plot(a) => run_plot(&a),
        Command::Selftest { seed } => match selftest::run(seed) {
            0 => Ok(()),
            n => bail!("{n} selftest check(s) failed"),
        },
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

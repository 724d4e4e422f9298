//! Subcommands of the `morl-exp` binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use morl_core::env::HORIZON;
use morl_core::morl::EpisodeLog;
use morl_core::oracle::{compute_deviations, enumerate_schedules, front_membership};
use serde::Serialize;

use crate::config::{ExperimentConfig, MissingConfig};
use crate::experiment::{run_experiment, CALIBRATION_FILE};
use crate::runlog::{expand_glob, is_baseline_log, read_logs};
use crate::stats::{aggregate, moving_average, moving_average_rewards};
use crate::svg;

#[derive(Debug, Parser)]
#[command(name = "morl-exp", version, about = "Multiobjective fitted Q-iteration experiments on the deep-drawing surrogate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run seeded task sequences (and baseline tasks), one CSV log per run.
    Run(RunArgs),
    /// Enumerate every force schedule at one friction and mark the Pareto front.
    Pareto(ParetoArgs),
    /// Box statistics of scalarized reward per task position and 250-episode bucket.
    Aggregate(LogArgs),
    /// Expectation deviations per episode and decision step.
    Deviations(LogArgs),
    /// Print the reward calibration of the configured surrogate.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seeds: Option<usize>,
    /// off or on
    #[arg(long)]
    pub update: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.028)]
    pub friction: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LogArgs {
    /// Glob selecting episode-log CSV files, e.g. 'runs/*.csv'
    pub logs: String,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub window: usize,
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write the sidecar file into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs the CLI and maps failures to exit codes: 2 for a missing config
/// file, 1 for any other error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<MissingConfig>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(a) => cmd_run(&a),
        Command::Pareto(a) => cmd_pareto(&a),
        Command::Aggregate(a) => cmd_aggregate(&a),
        Command::Deviations(a) => cmd_deviations(&a),
        Command::Calibrate(a) => cmd_calibrate(&a),
    }
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load_or_default(a.config.as_deref())?;
    if let Some(n) = a.seeds {
        cfg.experiment.seeds = n;
    }
    if let Some(u) = &a.update {
        cfg.experiment.update_rule = u.clone();
    }
    if let Some(s) = a.seed {
        cfg.experiment.base_seed = s;
    }
    if let Some(o) = &a.out {
        cfg.experiment.output_dir = o.clone();
    }
    cfg.validate()?;
    let out = cfg.experiment.output_dir.clone();
    let summary = run_experiment(&cfg, &out)?;
    println!(
        "{} log files written, {} already present, in {}",
        summary.written.len(),
        summary.skipped.len(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct OutcomeRow {
    a0: usize,
    a1: usize,
    a2: usize,
    a3: usize,
    a4: usize,
    reward_infeed: f64,
    reward_thickness: f64,
    on_front: bool,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))
}

fn cmd_pareto(a: &ParetoArgs) -> Result<()> {
    let cfg = ExperimentConfig::load_or_default(a.config.as_deref())?;
    let params = cfg.surrogate.params()?;
    let outcomes = enumerate_schedules(a.friction, &params)?;
    let front = front_membership(&outcomes);
    std::fs::create_dir_all(&a.out)?;
    let mut w = csv_writer(&a.out.join("pareto.csv"))?;
    for (o, &on_front) in outcomes.iter().zip(&front) {
        let s = o.schedule.map(|x| x.index());
        w.serialize(OutcomeRow {
            a0: s[0],
            a1: s[1],
            a2: s[2],
            a3: s[3],
            a4: s[4],
            reward_infeed: o.reward.infeed,
            reward_thickness: o.reward.thickness,
            on_front,
        })?;
    }
    w.flush()?;
    let points: Vec<_> = outcomes
        .iter()
        .zip(&front)
        .map(|(o, &f)| (o.reward.infeed, o.reward.thickness, f))
        .collect();
    let title = format!("Schedule outcomes at friction {}", a.friction);
    std::fs::write(
        a.out.join("pareto.svg"),
        svg::scatter(&points, &title, "infeed reward", "thickness reward"),
    )?;
    println!(
        "{} schedules, {} on the front",
        outcomes.len(),
        front.iter().filter(|&&f| f).count()
    );
    Ok(())
}

struct LoadedLogs {
    sequences: Vec<(PathBuf, Vec<EpisodeLog>)>,
    baselines: Vec<(PathBuf, Vec<EpisodeLog>)>,
}

fn load_logs(pattern: &str) -> Result<LoadedLogs> {
    let mut loaded = LoadedLogs {
        sequences: Vec::new(),
        baselines: Vec::new(),
    };
    for path in expand_glob(pattern)? {
        let logs = read_logs(&path)?;
        if is_baseline_log(&path) {
            loaded.baselines.push((path, logs));
        } else {
            loaded.sequences.push((path, logs));
        }
    }
    Ok(loaded)
}

#[derive(Serialize)]
struct SmoothedRow {
    file: String,
    episode: usize,
    mean_reward_infeed: f64,
    mean_reward_thickness: f64,
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_aggregate(a: &LogArgs) -> Result<()> {
    let logs = load_logs(&a.logs)?;
    let seq: Vec<EpisodeLog> = logs.sequences.iter().flat_map(|(_, l)| l.iter().cloned()).collect();
    let base: Vec<EpisodeLog> = logs.baselines.iter().flat_map(|(_, l)| l.iter().cloned()).collect();
    let rows = aggregate(&seq, &base)?;
    std::fs::create_dir_all(&a.out)?;
    let mut w = csv_writer(&a.out.join("aggregate.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    std::fs::write(
        a.out.join("aggregate.svg"),
        svg::box_plot(&rows, "Scalarized reward by task position"),
    )?;

    // Per-run smoothed reward terms over the whole logged sequence.
    let mut w = csv_writer(&a.out.join("moving_average.csv"))?;
    let mut first = None;
    for (path, l) in logs.sequences.iter().chain(&logs.baselines) {
        let smoothed = moving_average_rewards(l, a.window, a.stride);
        for &(episode, r1, r2) in &smoothed {
            w.serialize(SmoothedRow {
                file: file_name(path),
                episode,
                mean_reward_infeed: r1,
                mean_reward_thickness: r2,
            })?;
        }
        first.get_or_insert((path.clone(), smoothed));
    }
    w.flush()?;
    if let Some((path, smoothed)) = first {
        let series = vec![
            ("infeed".to_string(), smoothed.iter().map(|p| (p.0 as f64, p.1)).collect()),
            ("thickness".to_string(), smoothed.iter().map(|p| (p.0 as f64, p.2)).collect()),
        ];
        let title = format!("Moving-average reward terms, {}", file_name(&path));
        std::fs::write(a.out.join("moving_average.svg"), svg::line_plot(&series, &title, "episode", "reward"))?;
    }
    println!("{} aggregate rows from {} episodes", rows.len(), seq.len() + base.len());
    Ok(())
}

#[derive(Serialize)]
struct DeviationRow {
    episode: usize,
    t: usize,
    deviation: f64,
}

fn cmd_deviations(a: &LogArgs) -> Result<()> {
    let logs = load_logs(&a.logs)?;
    if logs.sequences.is_empty() {
        bail!("no sequence logs match {:?}; baseline logs carry no vector predictions", a.logs);
    }
    std::fs::create_dir_all(&a.out)?;
    let mut w = csv_writer(&a.out.join("deviations.csv"))?;
    // Sum and count per (t, episode) for the smoothed curves.
    let mut per_step: Vec<BTreeMap<usize, (f64, usize)>> = vec![BTreeMap::new(); HORIZON];
    let mut total = 0;
    for (path, l) in &logs.sequences {
        let records = compute_deviations(l).with_context(|| format!("in {}", path.display()))?;
        total += records.len();
        for r in records {
            w.serialize(DeviationRow {
                episode: r.episode,
                t: r.t,
                deviation: r.deviation,
            })?;
            let e = per_step[r.t].entry(r.episode).or_insert((0.0, 0));
            e.0 += r.deviation;
            e.1 += 1;
        }
    }
    w.flush()?;
    let series: Vec<(String, Vec<(f64, f64)>)> = per_step
        .iter()
        .enumerate()
        .map(|(t, m)| {
            let episodes: Vec<usize> = m.keys().copied().collect();
            let means: Vec<f64> = m.values().map(|&(s, n)| s / n as f64).collect();
            let smoothed = moving_average(&means, a.window, a.stride)
                .into_iter()
                .map(|(i, v)| (episodes[i] as f64, v))
                .collect();
            (format!("t = {t}"), smoothed)
        })
        .collect();
    std::fs::write(
        a.out.join("deviations.svg"),
        svg::line_plot(&series, "Expectation deviation by decision step", "episode", "expected - actual"),
    )?;
    println!("{total} deviation records");
    Ok(())
}

fn cmd_calibrate(a: &CalibrateArgs) -> Result<()> {
    let cfg = ExperimentConfig::load_or_default(a.config.as_deref())?;
    let mut section = cfg.surrogate.clone();
    section.reward_calibration = None;
    let sidecar = section.params()?.reward_calibration.to_sidecar();
    if let Some(out) = &a.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join(CALIBRATION_FILE), &sidecar)?;
    }
    print!("{sidecar}");
    Ok(())
}

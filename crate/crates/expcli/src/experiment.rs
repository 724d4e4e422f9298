//! Seeded batch execution of task sequences and baseline tasks.
//!
//! Run `i` uses the seed `derive_seed(base_seed, [i])`; the environment,
//! policy, weight and network-initialization streams are derived from it by
//! label, so every log file is a pure function of the resolved configuration
//! and its index.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use morl_core::morl::{
    run_baseline_task, run_sequence, AgentConfig, EpisodeLog, TaskConfig, WeightVector,
};
use morl_core::seed::{derive_seed, label, stream};
use morl_core::sim::{DeepDrawEnv, SurrogateParams};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::runlog::{baseline_file_name, sequence_file_name, write_logs};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CALIBRATION_FILE: &str = "calibration.txt";

pub fn run_seed(cfg: &ExperimentConfig, index: usize) -> u64 {
    derive_seed(cfg.experiment.base_seed, &[index as u64])
}

fn agent(cfg: &ExperimentConfig, init_seed: u64) -> Result<AgentConfig> {
    Ok(AgentConfig {
        scalarization: cfg.scalarization()?,
        train: cfg.train_config(init_seed),
    })
}

fn task_with(cfg: &ExperimentConfig, weights: WeightVector) -> TaskConfig {
    TaskConfig {
        weights,
        ..cfg.task_template()
    }
}

/// Protocol weights of sequence `index`, one per position.
pub fn sequence_weights(cfg: &ExperimentConfig, index: usize) -> Vec<WeightVector> {
    let mut rng = stream(run_seed(cfg, index), &[label::WEIGHTS]);
    (0..cfg.experiment.sequence_length)
        .map(|_| WeightVector::draw_protocol(&mut rng))
        .collect()
}

/// Weights of the independent baseline tasks of run `index`.
pub fn baseline_weights(cfg: &ExperimentConfig, index: usize) -> Vec<WeightVector> {
    let mut rng = stream(run_seed(cfg, index), &[label::BASELINE, label::WEIGHTS]);
    (0..cfg.experiment.sequence_length)
        .map(|_| WeightVector::draw_protocol(&mut rng))
        .collect()
}

pub fn run_sequence_logs(
    cfg: &ExperimentConfig,
    params: &Arc<SurrogateParams>,
    index: usize,
) -> Result<Vec<EpisodeLog>> {
    let seed = run_seed(cfg, index);
    let tasks: Vec<_> = sequence_weights(cfg, index)
        .into_iter()
        .map(|w| task_with(cfg, w))
        .collect();
    let mut env = DeepDrawEnv::new(params.clone(), stream(seed, &[label::ENV]));
    let mut rng = stream(seed, &[label::POLICY]);
    let agent = agent(cfg, derive_seed(seed, &[label::TRAIN]))?;
    Ok(run_sequence(&mut env, &tasks, &agent, index as u64, &mut rng)?.episodes)
}

pub fn run_baseline_logs(
    cfg: &ExperimentConfig,
    params: &Arc<SurrogateParams>,
    index: usize,
) -> Result<Vec<EpisodeLog>> {
    let seed = run_seed(cfg, index);
    let mut logs = Vec::new();
    for (k, w) in baseline_weights(cfg, index).into_iter().enumerate() {
        let k = k as u64;
        let mut env = DeepDrawEnv::new(params.clone(), stream(seed, &[label::BASELINE, label::ENV, k]));
        let mut rng = stream(seed, &[label::BASELINE, label::POLICY, k]);
        let agent = agent(cfg, derive_seed(seed, &[label::BASELINE, label::TRAIN, k]))?;
        let out = run_baseline_task(&mut env, &task_with(cfg, w), &agent, index as u64, k as usize, &mut rng)?;
        logs.extend(out.logs);
    }
    Ok(logs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum JobKind {
    Sequence,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunSummary {
    pub written: Vec<PathBuf>,
    /// Log files already present from an earlier, interrupted invocation.
    pub skipped: Vec<PathBuf>,
}

/// Runs every sequence (and baseline) of `cfg` into `out`, writing the
/// manifest and calibration sidecar first. Existing log files are kept, so
/// an interrupted run resumes where it stopped.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let mut resolved = cfg.resolved()?;
    resolved.experiment.output_dir = out.to_path_buf();
    let params = Arc::new(resolved.surrogate.params()?);
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;

    let manifest_path = out.join(MANIFEST_FILE);
    let manifest = resolved.to_toml()?;
    if manifest_path.exists() {
        let previous = std::fs::read_to_string(&manifest_path)?;
        if previous != manifest {
            bail!(
                "{} holds a run with a different configuration; choose another output directory",
                out.display()
            );
        }
    } else {
        std::fs::write(&manifest_path, &manifest)?;
    }
    std::fs::write(out.join(CALIBRATION_FILE), params.reward_calibration.to_sidecar())?;

    let mut jobs = Vec::new();
    for i in 0..resolved.experiment.seeds {
        jobs.push((JobKind::Sequence, i, out.join(sequence_file_name(i))));
        if resolved.experiment.baseline {
            jobs.push((JobKind::Baseline, i, out.join(baseline_file_name(i))));
        }
    }
    let results: Vec<Result<(PathBuf, bool)>> = jobs
        .into_par_iter()
        .map(|(kind, i, path)| {
            if path.exists() {
                return Ok((path, false));
            }
            let logs = match kind {
                JobKind::Sequence => run_sequence_logs(&resolved, &params, i)?,
                JobKind::Baseline => run_baseline_logs(&resolved, &params, i)?,
            };
            write_logs(&path, &logs)?;
            Ok((path, true))
        })
        .collect();
    let mut summary = RunSummary::default();
    for r in results {
        let (path, fresh) = r?;
        if fresh {
            summary.written.push(path);
        } else {
            summary.skipped.push(path);
        }
    }
    Ok(summary)
}

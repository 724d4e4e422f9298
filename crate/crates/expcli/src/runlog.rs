//! Episode-log CSV files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use morl_core::env::{RewardVector, HORIZON};
use morl_core::morl::{EpisodeLog, WeightVector};
use serde::{Deserialize, Serialize};

/// Prefix of baseline log files; aggregation routes them to the baseline
/// position.
pub const BASELINE_PREFIX: &str = "baseline_";
pub const SEQUENCE_PREFIX: &str = "seq_";

pub fn sequence_file_name(index: usize) -> String {
    format!("{SEQUENCE_PREFIX}{index:04}.csv")
}

pub fn baseline_file_name(index: usize) -> String {
    format!("{BASELINE_PREFIX}{index:04}.csv")
}

pub fn is_baseline_log(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.starts_with(BASELINE_PREFIX))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub sequence_id: u64,
    pub task_index: usize,
    pub episode_index: usize,
    pub action_0: usize,
    pub action_1: usize,
    pub action_2: usize,
    pub action_3: usize,
    pub action_4: usize,
    pub reward_infeed: f64,
    pub reward_thickness: f64,
    pub scalarized_reward: f64,
    pub epsilon: f64,
    #[serde(rename = "expected_H_t0")]
    pub expected_h_t0: f64,
    #[serde(rename = "expected_H_t1")]
    pub expected_h_t1: f64,
    #[serde(rename = "expected_H_t2")]
    pub expected_h_t2: f64,
    #[serde(rename = "expected_H_t3")]
    pub expected_h_t3: f64,
    #[serde(rename = "expected_H_t4")]
    pub expected_h_t4: f64,
    pub friction: f64,
    pub w_infeed: f64,
    pub w_thickness: f64,
}

impl From<&EpisodeLog> for LogRow {
    fn from(l: &EpisodeLog) -> Self {
        let h = |t: usize| l.expected_h.get(t).copied().unwrap_or(f64::NAN);
        LogRow {
            sequence_id: l.sequence_id,
            task_index: l.task_index,
            episode_index: l.episode_index,
            action_0: l.actions[0],
            action_1: l.actions[1],
            action_2: l.actions[2],
            action_3: l.actions[3],
            action_4: l.actions[4],
            reward_infeed: l.reward.infeed,
            reward_thickness: l.reward.thickness,
            scalarized_reward: l.scalarized_reward,
            epsilon: l.epsilon,
            expected_h_t0: h(0),
            expected_h_t1: h(1),
            expected_h_t2: h(2),
            expected_h_t3: h(3),
            expected_h_t4: h(4),
            friction: l.friction,
            w_infeed: l.weights.infeed,
            w_thickness: l.weights.thickness,
        }
    }
}

impl LogRow {
    pub fn to_episode_log(&self) -> Result<EpisodeLog> {
        Ok(EpisodeLog {
            sequence_id: self.sequence_id,
            task_index: self.task_index,
            episode_index: self.episode_index,
            actions: [self.action_0, self.action_1, self.action_2, self.action_3, self.action_4],
            reward: RewardVector::new(self.reward_infeed, self.reward_thickness),
            scalarized_reward: self.scalarized_reward,
            epsilon: self.epsilon,
            expected_h: self.expected_h().to_vec(),
            friction: self.friction,
            weights: WeightVector::new(self.w_infeed, self.w_thickness)?,
        })
    }

    pub fn expected_h(&self) -> [f64; HORIZON] {
        [
            self.expected_h_t0,
            self.expected_h_t1,
            self.expected_h_t2,
            self.expected_h_t3,
            self.expected_h_t4,
        ]
    }
}

/// Writes `logs` to `path` via a temporary file, so an interrupted run never
/// leaves a complete-looking log behind.
pub fn write_logs(path: &Path, logs: &[EpisodeLog]) -> Result<()> {
    let tmp = path.with_extension("csv.partial");
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&tmp)
            .with_context(|| format!("cannot create {}", tmp.display()))?;
        for l in logs {
            w.serialize(LogRow::from(l))?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path).with_context(|| format!("cannot move log into {}", path.display()))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<LogRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    r.deserialize()
        .map(|row| row.with_context(|| format!("malformed log {}", path.display())))
        .collect()
}

pub fn read_logs(path: &Path) -> Result<Vec<EpisodeLog>> {
    read_rows(path)?.iter().map(LogRow::to_episode_log).collect()
}

/// Expands a glob into a sorted list of files; an empty match is an error.
pub fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in glob::glob(pattern).with_context(|| format!("bad glob {pattern:?}"))? {
        let p = entry?;
        if p.is_file() {
            paths.push(p);
        }
    }
    if paths.is_empty() {
        bail!("no log files match {pattern:?}");
    }
    paths.sort();
    Ok(paths)
}

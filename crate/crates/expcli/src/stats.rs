//! Smoothing and box statistics over episode logs.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use morl_core::morl::EpisodeLog;
use serde::Serialize;

pub const BUCKET_EPISODES: usize = 250;

/// Mean of `values` over the window `[i - window/2, i + window/2)` around
/// every `stride`-th index `i`, starting at 0. Windows are truncated at both
/// ends of the series.
pub fn moving_average(values: &[f64], window: usize, stride: usize) -> Vec<(usize, f64)> {
    assert!(window >= 2 && window % 2 == 0, "window must be even");
    assert!(stride >= 1, "stride must be >= 1");
    let half = window / 2;
    (0..values.len())
        .step_by(stride)
        .map(|i| {
            let span = &values[i.saturating_sub(half)..(i + half).min(values.len())];
            (i, span.iter().sum::<f64>() / span.len() as f64)
        })
        .collect()
}

/// Per-component moving average of the terminal rewards, as
/// `(episode, mean infeed reward, mean thickness reward)`.
pub fn moving_average_rewards(logs: &[EpisodeLog], window: usize, stride: usize) -> Vec<(usize, f64, f64)> {
    let infeed: Vec<f64> = logs.iter().map(|l| l.reward.infeed).collect();
    let thickness: Vec<f64> = logs.iter().map(|l| l.reward.thickness).collect();
    moving_average(&infeed, window, stride)
        .into_iter()
        .zip(moving_average(&thickness, window, stride))
        .map(|((i, a), (_, b))| (i, a, b))
        .collect()
}

/// Five-number summary with Tukey whiskers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxStats {
    pub n: usize,
    pub mean: f64,
    pub whisker_low: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_high: f64,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Quartiles by the median-exclusive rule: Q1 and Q3 are the medians of the
/// lower and upper halves, the overall median left out when `n` is odd.
/// Whiskers reach the most extreme data within 1.5 IQR of the box.
pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let half = n / 2;
    let (q1, q3) = if half == 0 {
        (v[0], v[0])
    } else {
        (median_sorted(&v[..half]), median_sorted(&v[n - half..]))
    };
    let iqr = q3 - q1;
    let lo = q1 - 1.5 * iqr;
    let hi = q3 + 1.5 * iqr;
    Some(BoxStats {
        n,
        mean: v.iter().sum::<f64>() / n as f64,
        whisker_low: v.iter().copied().find(|&x| x >= lo).unwrap_or(v[0]),
        q1,
        median: median_sorted(&v),
        q3,
        whisker_high: v.iter().rev().copied().find(|&x| x <= hi).unwrap_or(v[n - 1]),
    })
}

/// `a`, `b`, ... for sequence positions.
pub fn position_label(task_index: usize) -> String {
    if task_index < 26 {
        char::from(b'a' + task_index as u8).to_string()
    } else {
        format!("p{task_index}")
    }
}

pub const BASELINE_POSITION: &str = "baseline";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Position {
    Sequence(usize),
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub task_position: String,
    pub episode_bucket: usize,
    pub episode_start: usize,
    pub episode_end: usize,
    pub n: usize,
    pub mean: f64,
    pub whisker_low: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_high: f64,
}

/// Groups the scalarized rewards of sequence logs by task position and of
/// baseline logs into the baseline position, in 250-episode buckets.
pub fn aggregate(sequence_logs: &[EpisodeLog], baseline_logs: &[EpisodeLog]) -> Result<Vec<AggregateRow>> {
    if sequence_logs.is_empty() && baseline_logs.is_empty() {
        bail!("no episodes to aggregate");
    }
    let mut groups: BTreeMap<(Position, usize), Vec<f64>> = BTreeMap::new();
    let tagged = sequence_logs
        .iter()
        .map(|l| (Position::Sequence(l.task_index), l))
        .chain(baseline_logs.iter().map(|l| (Position::Baseline, l)));
    for (pos, l) in tagged {
        groups
            .entry((pos, l.episode_index / BUCKET_EPISODES))
            .or_default()
            .push(l.scalarized_reward);
    }
    Ok(groups
        .into_iter()
        .map(|((pos, bucket), values)| {
            let s = box_stats(&values).expect("groups are non-empty");
            AggregateRow {
                task_position: match pos {
                    Position::Sequence(k) => position_label(k),
                    Position::Baseline => BASELINE_POSITION.to_string(),
                },
                episode_bucket: bucket,
                episode_start: bucket * BUCKET_EPISODES,
                episode_end: (bucket + 1) * BUCKET_EPISODES,
                n: s.n,
                mean: s.mean,
                whisker_low: s.whisker_low,
                q1: s.q1,
                median: s.median,
                q3: s.q3,
                whisker_high: s.whisker_high,
            }
        })
        .collect())
}

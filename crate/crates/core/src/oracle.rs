//! Ground truth for the surrogate: every force schedule evaluated
//! noise-free at a fixed friction, the Pareto front of the outcomes, and the
//! deviation between predicted and obtained scalarized reward.

use thiserror::Error;

use crate::env::{Action, RewardVector, HORIZON};
use crate::morl::{EpisodeLog, Scalarization, WeightVector};
use crate::sim::{schedule_from_code, simulate_schedule, terminal_reward, SurrogateParams, NUM_SCHEDULES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("friction must be positive, got {0}")]
    InvalidFriction(f64),
    #[error("episode {episode} of task {task_index} is missing expectation fields")]
    MissingExpectations { task_index: usize, episode: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOutcome {
    pub schedule: [Action; HORIZON],
    pub reward: RewardVector,
    pub scalarized: Option<f64>,
}

/// Evaluates all `7^5` schedules, in lexicographic schedule order.
pub fn enumerate_schedules(friction: f64, params: &SurrogateParams) -> Result<Vec<ScheduleOutcome>, OracleError> {
    if !(friction > 0.0 && friction.is_finite()) {
        return Err(OracleError::InvalidFriction(friction));
    }
    Ok((0..NUM_SCHEDULES)
        .map(|code| {
            let schedule = schedule_from_code(code);
            let end = simulate_schedule(friction, &schedule, params);
            ScheduleOutcome {
                schedule,
                reward: terminal_reward(&end, params),
                scalarized: None,
            }
        })
        .collect())
}

/// `a` dominates `b` when it is at least as good in both components and
/// strictly better in one (maximization).
pub fn dominates(a: &RewardVector, b: &RewardVector) -> bool {
    a.infeed >= b.infeed
        && a.thickness >= b.thickness
        && (a.infeed > b.infeed || a.thickness > b.thickness)
}

/// All outcomes not dominated by any other, ordered by infeed reward then
/// thickness reward, both descending. Duplicated front points are kept.
///
/// Sort-and-sweep: after ordering by (infeed desc, thickness desc), a point
/// is dominated exactly when some earlier point with a different reward
/// vector has thickness at least as large.
pub fn pareto_front(outcomes: &[ScheduleOutcome]) -> Vec<ScheduleOutcome> {
    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&outcomes[i].reward, &outcomes[j].reward);
        b.infeed
            .total_cmp(&a.infeed)
            .then(b.thickness.total_cmp(&a.thickness))
            .then(i.cmp(&j))
    });
    let mut front = Vec::new();
    // Best thickness among strictly-better-infeed points, and among the
    // current infeed group.
    let mut best_thickness_before = f64::NEG_INFINITY;
    let mut k = 0;
    while k < order.len() {
        let infeed = outcomes[order[k]].reward.infeed;
        let group_end = (k..order.len())
            .find(|&m| outcomes[order[m]].reward.infeed != infeed)
            .unwrap_or(order.len());
        // Within a group sorted by thickness desc, only the maximal-thickness
        // points are undominated inside the group.
        let group_max = outcomes[order[k]].reward.thickness;
        for &idx in &order[k..group_end] {
            let r = &outcomes[idx].reward;
            if r.thickness == group_max && r.thickness > best_thickness_before {
                front.push(outcomes[idx].clone());
            }
        }
        best_thickness_before = best_thickness_before.max(group_max);
        k = group_end;
    }
    front
}

/// Marks which outcomes lie on the front (same order as `outcomes`).
pub fn front_membership(outcomes: &[ScheduleOutcome]) -> Vec<bool> {
    let front = pareto_front(outcomes);
    outcomes
        .iter()
        .map(|o| front.iter().any(|f| f.reward == o.reward))
        .collect()
}

/// Predicted minus obtained scalarized reward at one decision step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationRecord {
    pub task_index: usize,
    pub episode: usize,
    pub t: usize,
    pub expected: f64,
    pub actual: f64,
    pub deviation: f64,
}

/// One record per (episode, t). The actual value is the harmonic-mean
/// scalarized terminal reward under each row's own weights.
pub fn compute_deviations(logs: &[EpisodeLog]) -> Result<Vec<DeviationRecord>, OracleError> {
    compute_deviations_with(logs, Scalarization::Harmonic)
}

pub fn compute_deviations_with(
    logs: &[EpisodeLog],
    f: Scalarization,
) -> Result<Vec<DeviationRecord>, OracleError> {
    let mut out = Vec::with_capacity(logs.len() * HORIZON);
    for row in logs {
        if row.expected_h.len() != HORIZON || row.expected_h.iter().any(|v| !v.is_finite()) {
            return Err(OracleError::MissingExpectations {
                task_index: row.task_index,
                episode: row.episode_index,
            });
        }
        let actual = f.reward(&row.reward, &row.weights);
        for (t, &expected) in row.expected_h.iter().enumerate() {
            out.push(DeviationRecord {
                task_index: row.task_index,
                episode: row.episode_index,
                t,
                expected,
                actual,
                deviation: expected - actual,
            });
        }
    }
    Ok(out)
}

/// Scalarizes every outcome under `w`.
pub fn with_scalarization(mut outcomes: Vec<ScheduleOutcome>, w: &WeightVector, f: Scalarization) -> Vec<ScheduleOutcome> {
    for o in &mut outcomes {
        o.scalarized = Some(f.reward(&o.reward, w));
    }
    outcomes
}

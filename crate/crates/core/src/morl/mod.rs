//! Multiobjective fitted Q-iteration with per-timestep networks.
//!
//! The agent learns a vector-valued `Q_t(s, a)` (one output per objective)
//! from a persistent sample memory, acts greedily on the scalarized
//! estimate under the current objective weights, and retrains all networks
//! from scratch every `J` episodes, backwards from the terminal step.
//! Because the memory and networks carry over when the weights change,
//! later tasks in a sequence start from everything learned before.

mod memory;
mod policy;
mod qnet;
mod runner;
mod scalarize;
mod targets;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use memory::{SampleMemory, SampleTuple, StateFeatures};
pub use policy::{epsilon_schedule, explore_policy, goal_policy, greedy_action};
pub use qnet::{architecture_for, hidden_layers_for, QNetSet};
pub use runner::{
    run_baseline_task, run_sequence, run_task, AgentConfig, Carry, EpisodeLog, SequenceLogs,
    TaskOutcome,
};
pub use scalarize::{scalarize_arithmetic, scalarize_harmonic, Scalarization, ZERO_REWARD_NUDGE};
pub use targets::{
    build_targets_off_policy, build_targets_on_policy, ExplorativePolicy, RewardTarget,
    TargetContext, TargetSet, UpdateConfig, UpdateRule,
};

use crate::env::EnvError;
use crate::neural::{NeuralError, TrainConfig};
use crate::seed::derive_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorlError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Training(#[from] NeuralError),
}

/// Strictly positive objective weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub infeed: f64,
    pub thickness: f64,
}

impl WeightVector {
    pub fn new(infeed: f64, thickness: f64) -> Result<Self, MorlError> {
        if infeed > 0.0 && thickness > 0.0 && infeed.is_finite() && thickness.is_finite() {
            Ok(WeightVector { infeed, thickness })
        } else {
            Err(MorlError::InvalidConfig(format!(
                "weights must be positive, got ({infeed}, {thickness})"
            )))
        }
    }

    /// Protocol weighting `w_thickness = k`, `w_infeed = 10 - k`, `k` in 1..=9.
    pub fn from_thickness_level(k: u8) -> Result<Self, MorlError> {
        if !(1..=9).contains(&k) {
            return Err(MorlError::InvalidConfig(format!("thickness level {k} not in 1..=9")));
        }
        Self::new(10.0 - k as f64, k as f64)
    }

    /// Draws `w_thickness` uniformly from `{1, ..., 9}`.
    pub fn draw_protocol<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_thickness_level(rng.random_range(1..=9)).expect("level in range")
    }

    pub fn scaled(&self, c: f64) -> Result<Self, MorlError> {
        Self::new(c * self.infeed, c * self.thickness)
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.infeed, self.thickness]
    }
}

/// One configuration of the process: objective weights plus learning
/// schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskConfig {
    pub weights: WeightVector,
    pub episodes: usize,
    /// Episodes between retraining events.
    pub retrain_interval: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon0: f64,
    pub lambda: f64,
    pub update_rule: UpdateRule,
}

impl TaskConfig {
    /// 1000 episodes, retraining every 50, α = 0.7, γ = 1, ε₀ = 0.1,
    /// λ = 1e-3, off-policy updates.
    pub fn protocol(weights: WeightVector) -> Self {
        TaskConfig {
            weights,
            episodes: 1000,
            retrain_interval: 50,
            alpha: 0.7,
            gamma: 1.0,
            epsilon0: 0.1,
            lambda: 1e-3,
            update_rule: UpdateRule::OffPolicy,
        }
    }

    pub fn validate(&self) -> Result<(), MorlError> {
        let bad = |m: String| Err(MorlError::InvalidConfig(m));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must be in (0, 1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon0) {
            return bad(format!("epsilon0 must be in [0, 1], got {}", self.epsilon0));
        }
        if !(self.lambda >= 0.0) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if self.retrain_interval == 0 {
            return bad("retrain_interval must be >= 1".into());
        }
        Ok(())
    }

    pub fn update(&self) -> UpdateConfig {
        UpdateConfig {
            alpha: self.alpha,
            gamma: self.gamma,
        }
    }
}

/// Everything `retrain_all` needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    pub rule: UpdateRule,
    pub update: UpdateConfig,
    /// Policy scalarization used for on-policy bootstrap actions.
    pub scalarization: Scalarization,
    pub reward: RewardTarget,
    /// Base training config; the init seed is re-derived per network.
    pub train: TrainConfig,
}

/// Retrains every `Q_t` from scratch, from `t = 4` down to `t = 0`, each on
/// targets bootstrapped from the freshly trained `Q_{t+1}`.
///
/// Steps without samples stay untrained.
pub fn retrain_all<R: Rng + ?Sized>(
    memory: &SampleMemory,
    prev: &QNetSet,
    learner: &Learner,
    weights: &WeightVector,
    epsilon_now: f64,
    rng: &mut R,
) -> Result<QNetSet, MorlError> {
    use crate::env::HORIZON;
    let generation = prev.generation() + 1;
    let output_dim = learner.reward.output_dim();
    let mut nets = vec![None; HORIZON];
    for t in (0..HORIZON).rev() {
        if memory.len_at(t) == 0 {
            continue;
        }
        let ctx = TargetContext {
            old: prev.net(t),
            next: nets.get(t + 1).and_then(Option::as_ref),
            update: learner.update,
            reward: learner.reward,
        };
        let set = match learner.rule {
            UpdateRule::OffPolicy => build_targets_off_policy(memory, t, &ctx),
            UpdateRule::OnPolicy => build_targets_on_policy(
                memory,
                t,
                &ctx,
                &mut ExplorativePolicy {
                    weights: *weights,
                    scalarization: learner.scalarization,
                    epsilon: epsilon_now,
                    rng: &mut *rng,
                },
            ),
        };
        let cfg = learner
            .train
            .with_seed(derive_seed(learner.train.init_seed, &[generation as u64, t as u64]));
        let arch = architecture_for(t, output_dim);
        let out = crate::neural::train(&arch, set.inputs.view(), set.targets.view(), &cfg)?;
        nets[t] = Some(out.net);
    }
    Ok(QNetSet::from_nets(nets, output_dim, generation))
}

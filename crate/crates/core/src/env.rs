//! Fixed-horizon episodic MDP contract.
//!
//! Every episode consists of exactly [`HORIZON`] decisions. An observation is
//! emitted before the first action and after each action, so a completed
//! trajectory has `HORIZON + 1` observations. Rewards are vector-valued and
//! only non-zero at the terminal step.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of control decisions per episode.
pub const HORIZON: usize = 5;

/// Number of discrete blank-holder force levels.
pub const NUM_ACTIONS: usize = 7;

/// Upper bound of each terminal reward component.
pub const REWARD_MAX: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("episode exhausted")]
    EpisodeExhausted,
    #[error("invalid action index {0}")]
    InvalidAction(usize),
}

/// Discrete blank-holder force setting.
///
/// Index `i` maps to `20 + 20 i` kN, so the valid forces are
/// `{20, 40, ..., 140}` kN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action(u8);

impl Action {
    pub const MIN_FORCE_KN: f64 = 20.0;
    pub const MAX_FORCE_KN: f64 = 140.0;

    pub fn new(index: usize) -> Result<Self, EnvError> {
        if index < NUM_ACTIONS {
            Ok(Action(index as u8))
        } else {
            Err(EnvError::InvalidAction(index))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Blank-holder force in kN.
    pub fn force_kn(self) -> f64 {
        Self::MIN_FORCE_KN + 20.0 * self.0 as f64
    }

    /// Force rescaled to `[0, 1]`.
    pub fn normalized(self) -> f64 {
        self.0 as f64 / (NUM_ACTIONS - 1) as f64
    }

    pub fn all() -> impl Iterator<Item = Action> + Clone {
        (0..NUM_ACTIONS as u8).map(Action)
    }

    pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Action {
        Action(rng.random_range(0..NUM_ACTIONS as u8))
    }
}

/// Two-component reward: material efficiency (infeed) and product quality
/// (minimum wall thickness).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardVector {
    pub infeed: f64,
    pub thickness: f64,
}

impl RewardVector {
    pub const ZERO: RewardVector = RewardVector {
        infeed: 0.0,
        thickness: 0.0,
    };

    pub fn new(infeed: f64, thickness: f64) -> Self {
        RewardVector { infeed, thickness }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.infeed, self.thickness]
    }

    pub fn is_zero(&self) -> bool {
        self.infeed == 0.0 && self.thickness == 0.0
    }
}

/// Noisy process measurements available to the agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Stamp force, kN.
    pub stamp_force: f64,
    /// Blank infeed in x-direction, mm.
    pub blank_infeed_x: f64,
    /// Blank-holder offset in y-direction, mm.
    pub blankholder_offset_y: f64,
}

impl Observation {
    pub fn as_array(&self) -> [f64; 3] {
        [self.stamp_force, self.blank_infeed_x, self.blankholder_offset_y]
    }
}

/// Outcome of a single [`Environment::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: RewardVector,
    pub terminal: bool,
}

/// A fixed-horizon stochastic process with vector rewards.
///
/// Implementations own their random stream so that a trajectory is a pure
/// function of the stream state at `reset` and the action sequence.
pub trait Environment {
    /// Starts a fresh episode and returns the step-0 observation.
    fn reset(&mut self) -> Observation;

    /// Applies `action`; errors once [`HORIZON`] actions have been taken.
    fn step(&mut self, action: Action) -> Result<StepResult, EnvError>;

    /// Latent stochastic parameter of the current episode, for logging only.
    fn episode_parameter(&self) -> f64;

    /// Maps an observation onto the agent's normalized feature scale.
    fn normalize(&self, observation: &Observation) -> [f64; 3];
}

/// One completed episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub observations: Vec<Observation>,
    pub actions: Vec<Action>,
    pub reward: RewardVector,
    pub friction_used: f64,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.actions.len() == HORIZON && self.observations.len() == HORIZON + 1
    }
}

/// Runs one full episode, choosing each action from the observations seen so
/// far and the actions already taken.
pub fn rollout<E, F>(env: &mut E, mut choose: F) -> Result<Trajectory, EnvError>
where
    E: Environment + ?Sized,
    F: FnMut(&[Observation], &[Action]) -> Action,
{
    let mut observations = Vec::with_capacity(HORIZON + 1);
    let mut actions = Vec::with_capacity(HORIZON);
    observations.push(env.reset());
    let mut reward = RewardVector::ZERO;
    for _ in 0..HORIZON {
        let action = choose(&observations, &actions);
        let step = env.step(action)?;
        actions.push(action);
        observations.push(step.observation);
        reward = step.reward;
    }
    Ok(Trajectory {
        observations,
        actions,
        reward,
        friction_used: env.episode_parameter(),
    })
}

//! Analytic surrogate of a deep-drawing process with blank-holder force
//! control.
//!
//! Higher blank-holder force times friction restrains the flange, which cuts
//! the material infeed and forces the wall to stretch and thin instead. The
//! two terminal objectives (low infeed, high minimum thickness) are therefore
//! in conflict, and the optimal force schedule depends on the friction
//! coefficient, which varies per episode and is only visible through noisy
//! measurements.
//!
//! Per control interval with force `F` and friction `mu`:
//!
//! ```text
//! restraint r   = mu * F
//! infeed    Δd  = demand * exp(-r / r0)
//! stretch       = demand - Δd
//! thickness    *= 1 - c_s * stretch
//! ```

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::env::{
    Action, EnvError, Environment, Observation, RewardVector, StepResult, HORIZON, NUM_ACTIONS,
    REWARD_MAX,
};

/// Shape parameters of the per-episode friction distribution.
pub const FRICTION_BETA_ALPHA: f64 = 3.0;
pub const FRICTION_BETA_BETA: f64 = 15.0;

/// Friction coefficients used for reward calibration and observable ranges.
pub fn friction_grid() -> Vec<f64> {
    (1..=12).map(|k| k as f64 * 0.005).collect()
}

/// Hidden physical state of one process execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentProcessState {
    pub friction_mu: f64,
    /// mm
    pub cumulative_infeed: f64,
    /// Relative to the initial sheet thickness.
    pub min_thickness: f64,
    pub step: usize,
}

impl LatentProcessState {
    pub fn initial(friction_mu: f64, p: &SurrogateParams) -> Self {
        LatentProcessState {
            friction_mu,
            cumulative_infeed: 0.0,
            min_thickness: p.initial_thickness,
            step: 0,
        }
    }
}

/// Affine map from raw terminal quantities onto `[0, 10]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardCalibration {
    /// (min, max) of the negated final infeed.
    pub infeed: (f64, f64),
    /// (min, max) of the final minimum thickness.
    pub thickness: (f64, f64),
}

impl RewardCalibration {
    fn scale(raw: f64, (lo, hi): (f64, f64)) -> f64 {
        (REWARD_MAX * (raw - lo) / (hi - lo)).clamp(0.0, REWARD_MAX)
    }

    pub fn apply(&self, raw_infeed: f64, raw_thickness: f64) -> RewardVector {
        RewardVector::new(
            Self::scale(raw_infeed, self.infeed),
            Self::scale(raw_thickness, self.thickness),
        )
    }

    /// Plain-text sidecar: one `name min max` line per component.
    pub fn to_sidecar(&self) -> String {
        format!(
            "infeed {:?} {:?}\nthickness {:?} {:?}\n",
            self.infeed.0, self.infeed.1, self.thickness.0, self.thickness.1
        )
    }
}

/// Documented value range `[lo, hi]` of each observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableRanges {
    pub stamp_force: (f64, f64),
    pub blank_infeed_x: (f64, f64),
    pub blankholder_offset_y: (f64, f64),
}

impl ObservableRanges {
    pub fn as_array(&self) -> [(f64, f64); 3] {
        [self.stamp_force, self.blank_infeed_x, self.blankholder_offset_y]
    }

    /// Min-max normalization of an observation onto (approximately) `[0, 1]`.
    pub fn normalize(&self, o: &Observation) -> [f64; 3] {
        let raw = o.as_array();
        let ranges = self.as_array();
        std::array::from_fn(|i| (raw[i] - ranges[i].0) / (ranges[i].1 - ranges[i].0))
    }
}

/// Constants of the surrogate process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateParams {
    /// mm of material demanded by the punch per control interval.
    pub draw_demand_per_step: f64,
    /// kN
    pub restraint_scale: f64,
    /// 1/mm
    pub thinning_coeff: f64,
    pub force_gain: f64,
    /// kN/mm
    pub stretch_force_coeff: f64,
    /// kN/mm
    pub holder_stiffness: f64,
    pub friction_scale: f64,
    pub initial_thickness: f64,
    /// Measurement noise σ for (stamp force, infeed, holder offset).
    pub noise_sigmas: [f64; 3],
    pub reward_calibration: RewardCalibration,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        let mut p = SurrogateParams {
            draw_demand_per_step: 1.0,
            restraint_scale: 1.5,
            thinning_coeff: 0.08,
            force_gain: 10.0,
            stretch_force_coeff: 5.0,
            holder_stiffness: 1000.0,
            friction_scale: 0.2,
            initial_thickness: 1.0,
            noise_sigmas: [0.0; 3],
            reward_calibration: RewardCalibration {
                infeed: (0.0, 1.0),
                thickness: (0.0, 1.0),
            },
        };
        p.noise_sigmas = p.default_noise_sigmas();
        p.reward_calibration = calibrate_rewards(&p);
        p
    }
}

impl SurrogateParams {
    /// Fixed value ranges of the observables, taken from the extremes the
    /// process can reach over the calibration friction grid.
    pub fn observable_ranges(&self) -> ObservableRanges {
        let mu_max = friction_grid().into_iter().fold(0.0, f64::max);
        ObservableRanges {
            stamp_force: (
                0.0,
                self.force_gain
                    * (Action::MAX_FORCE_KN * mu_max
                        + self.stretch_force_coeff * self.draw_demand_per_step),
            ),
            blank_infeed_x: (0.0, HORIZON as f64 * self.draw_demand_per_step),
            blankholder_offset_y: (0.0, Action::MAX_FORCE_KN / self.holder_stiffness),
        }
    }

    /// 0.5 % of the value range for stamp force and infeed, 0.25 % for the
    /// holder offset.
    pub fn default_noise_sigmas(&self) -> [f64; 3] {
        let r = self.observable_ranges();
        let width = |(lo, hi): (f64, f64)| hi - lo;
        [
            0.005 * width(r.stamp_force),
            0.005 * width(r.blank_infeed_x),
            0.0025 * width(r.blankholder_offset_y),
        ]
    }

    pub fn validate(&self) -> Result<(), String> {
        let positives = [
            ("draw_demand_per_step", self.draw_demand_per_step),
            ("restraint_scale", self.restraint_scale),
            ("thinning_coeff", self.thinning_coeff),
            ("force_gain", self.force_gain),
            ("stretch_force_coeff", self.stretch_force_coeff),
            ("holder_stiffness", self.holder_stiffness),
            ("friction_scale", self.friction_scale),
            ("initial_thickness", self.initial_thickness),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.noise_sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err("noise_sigmas must be non-negative".into());
        }
        let c = &self.reward_calibration;
        if !(c.infeed.0 < c.infeed.1 && c.thickness.0 < c.thickness.1) {
            return Err("reward_calibration requires min < max per component".into());
        }
        Ok(())
    }
}

/// Draws a friction coefficient `friction_scale * B`, `B ~ Beta(3, 15)`.
pub fn sample_friction<R: Rng + ?Sized>(rng: &mut R, p: &SurrogateParams) -> f64 {
    let beta = Beta::new(FRICTION_BETA_ALPHA, FRICTION_BETA_BETA).expect("valid beta shape");
    p.friction_scale * beta.sample(rng)
}

/// Material stretched (mm) during one interval at the given friction and force.
fn stretch_for(friction_mu: f64, action: Action, p: &SurrogateParams) -> f64 {
    p.draw_demand_per_step - infeed_for(friction_mu, action, p)
}

fn infeed_for(friction_mu: f64, action: Action, p: &SurrogateParams) -> f64 {
    let restraint = friction_mu * action.force_kn();
    p.draw_demand_per_step * (-restraint / p.restraint_scale).exp()
}

/// Advances the latent state by one control interval.
pub fn simulate_step(
    s: &LatentProcessState,
    action: Action,
    p: &SurrogateParams,
) -> LatentProcessState {
    debug_assert!(s.step < HORIZON);
    let infeed = infeed_for(s.friction_mu, action, p);
    let stretch = p.draw_demand_per_step - infeed;
    LatentProcessState {
        friction_mu: s.friction_mu,
        cumulative_infeed: s.cumulative_infeed + infeed,
        min_thickness: s.min_thickness * (1.0 - p.thinning_coeff * stretch),
        step: s.step + 1,
    }
}

/// Noise-free measurements of the latent state.
pub fn observe_raw(
    s: &LatentProcessState,
    last_action: Option<Action>,
    p: &SurrogateParams,
) -> Observation {
    let (stamp_force, offset) = match last_action {
        Some(a) => (
            p.force_gain
                * (a.force_kn() * s.friction_mu
                    + p.stretch_force_coeff * stretch_for(s.friction_mu, a, p)),
            a.force_kn() / p.holder_stiffness,
        ),
        None => (0.0, 0.0),
    };
    Observation {
        stamp_force,
        blank_infeed_x: s.cumulative_infeed,
        blankholder_offset_y: offset,
    }
}

/// Measurements with additive Gaussian noise.
pub fn observe<R: Rng + ?Sized>(
    s: &LatentProcessState,
    last_action: Option<Action>,
    p: &SurrogateParams,
    rng: &mut R,
) -> Observation {
    let raw = observe_raw(s, last_action, p);
    let mut noisy = |v: f64, sigma: f64| {
        if sigma > 0.0 {
            v + Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
        } else {
            v
        }
    };
    Observation {
        stamp_force: noisy(raw.stamp_force, p.noise_sigmas[0]),
        blank_infeed_x: noisy(raw.blank_infeed_x, p.noise_sigmas[1]),
        blankholder_offset_y: noisy(raw.blankholder_offset_y, p.noise_sigmas[2]),
    }
}

/// Raw terminal quantities `(-final infeed, min thickness)`.
pub fn raw_terminal(s: &LatentProcessState) -> (f64, f64) {
    (-s.cumulative_infeed, s.min_thickness)
}

pub fn terminal_reward(s: &LatentProcessState, p: &SurrogateParams) -> RewardVector {
    debug_assert_eq!(s.step, HORIZON);
    let (infeed, thickness) = raw_terminal(s);
    p.reward_calibration.apply(infeed, thickness)
}

/// Final latent state of a full schedule at a fixed friction, noise-free.
pub fn simulate_schedule(
    friction_mu: f64,
    schedule: &[Action; HORIZON],
    p: &SurrogateParams,
) -> LatentProcessState {
    schedule
        .iter()
        .fold(LatentProcessState::initial(friction_mu, p), |s, &a| {
            simulate_step(&s, a, p)
        })
}

/// Decodes `code` in `0..7^5` into a schedule, most significant digit first.
pub fn schedule_from_code(mut code: usize) -> [Action; HORIZON] {
    let mut out = [Action::new(0).unwrap(); HORIZON];
    for slot in out.iter_mut().rev() {
        *slot = Action::new(code % NUM_ACTIONS).unwrap();
        code /= NUM_ACTIONS;
    }
    out
}

pub const NUM_SCHEDULES: usize = NUM_ACTIONS.pow(HORIZON as u32);

/// Global per-component min/max of the raw terminal quantities over every
/// schedule at every friction of the calibration grid.
pub fn calibrate_rewards(p: &SurrogateParams) -> RewardCalibration {
    let mut infeed = (f64::INFINITY, f64::NEG_INFINITY);
    let mut thickness = (f64::INFINITY, f64::NEG_INFINITY);
    for mu in friction_grid() {
        for code in 0..NUM_SCHEDULES {
            let end = simulate_schedule(mu, &schedule_from_code(code), p);
            let (ri, rt) = raw_terminal(&end);
            infeed = (infeed.0.min(ri), infeed.1.max(ri));
            thickness = (thickness.0.min(rt), thickness.1.max(rt));
        }
    }
    RewardCalibration { infeed, thickness }
}

/// Deep-drawing environment over the surrogate process.
#[derive(Debug, Clone)]
pub struct DeepDrawEnv {
    params: Arc<SurrogateParams>,
    ranges: ObservableRanges,
    rng: ChaCha8Rng,
    state: LatentProcessState,
}

impl DeepDrawEnv {
    pub fn new(params: Arc<SurrogateParams>, rng: ChaCha8Rng) -> Self {
        let state = LatentProcessState {
            step: HORIZON,
            ..LatentProcessState::initial(0.0, &params)
        };
        let ranges = params.observable_ranges();
        DeepDrawEnv {
            params,
            ranges,
            rng,
            state,
        }
    }

    pub fn from_seed(params: Arc<SurrogateParams>, seed: u64) -> Self {
        Self::new(params, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn params(&self) -> &SurrogateParams {
        &self.params
    }

    pub fn latent(&self) -> &LatentProcessState {
        &self.state
    }
}

impl Environment for DeepDrawEnv {
    fn reset(&mut self) -> Observation {
        let mu = sample_friction(&mut self.rng, &self.params);
        self.state = LatentProcessState::initial(mu, &self.params);
        observe(&self.state, None, &self.params, &mut self.rng)
    }

    fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        if self.state.step >= HORIZON {
            return Err(EnvError::EpisodeExhausted);
        }
        self.state = simulate_step(&self.state, action, &self.params);
        let observation = observe(&self.state, Some(action), &self.params, &mut self.rng);
        let terminal = self.state.step == HORIZON;
        let reward = if terminal {
            terminal_reward(&self.state, &self.params)
        } else {
            RewardVector::ZERO
        };
        Ok(StepResult {
            observation,
            reward,
            terminal,
        })
    }

    fn episode_parameter(&self) -> f64 {
        self.state.friction_mu
    }

    fn normalize(&self, observation: &Observation) -> [f64; 3] {
        self.ranges.normalize(observation)
    }
}

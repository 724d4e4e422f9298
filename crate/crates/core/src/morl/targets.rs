//! Component-wise fitted Q-iteration targets.
//!
//! For each stored tuple and each output component `i`:
//!
//! ```text
//! target_i = (1 - α) Q_i^old(s, a) + α [R_i + γ B_i(s')]
//! ```
//!
//! where `Q^old` is the previous generation's prediction (zero before the
//! first retraining) and the bootstrap `B` is absent at the terminal step.
//! Off-policy updates bootstrap with `max_a' Q_i^next(s', a')` taken
//! independently per component; on-policy updates evaluate `Q^next` at a
//! single action `a'` drawn from the current ε-greedy policy.

use ndarray::{Array2, ArrayView2, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::memory::{SampleMemory, SampleTuple, StateFeatures};
use super::policy::{explore_policy, greedy_action};
use super::{Scalarization, WeightVector};
use crate::env::{Action, RewardVector, NUM_ACTIONS};
use crate::neural::Mlp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateRule {
    /// Q-learning style, per-component max.
    #[default]
    OffPolicy,
    /// SARSA style, bootstrap at a freshly sampled explorative action.
    OnPolicy,
}

impl std::str::FromStr for UpdateRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" | "off-policy" => Ok(UpdateRule::OffPolicy),
            "on" | "on-policy" => Ok(UpdateRule::OnPolicy),
            other => Err(format!("unknown update rule {other:?} (expected off or on)")),
        }
    }
}

impl UpdateRule {
    pub fn short_name(self) -> &'static str {
        match self {
            UpdateRule::OffPolicy => "off",
            UpdateRule::OnPolicy => "on",
        }
    }
}

/// What the networks regress on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardTarget {
    /// Both reward components, one output each.
    Vector,
    /// The weighted arithmetic mean of the reward as a single output.
    Arithmetic(WeightVector),
}

impl RewardTarget {
    pub fn output_dim(&self) -> usize {
        match self {
            RewardTarget::Vector => 2,
            RewardTarget::Arithmetic(_) => 1,
        }
    }

    fn write(&self, r: &RewardVector, out: &mut [f64]) {
        match self {
            RewardTarget::Vector => out.copy_from_slice(&r.as_array()),
            RewardTarget::Arithmetic(w) => {
                out[0] = Scalarization::Arithmetic.apply(r.as_array(), w)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateConfig {
    pub alpha: f64,
    pub gamma: f64,
}

/// Networks and constants needed to build the targets at one step.
#[derive(Debug, Clone, Copy)]
pub struct TargetContext<'a> {
    /// Previous-generation `Q_t`.
    pub old: Option<&'a Mlp>,
    /// Current-generation `Q_{t+1}`.
    pub next: Option<&'a Mlp>,
    pub update: UpdateConfig,
    pub reward: RewardTarget,
}

/// Regression inputs `s ⊕ a` and their targets, one row per tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
}

impl TargetSet {
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// On-policy bootstrap action source.
pub struct ExplorativePolicy<'r, R: Rng + ?Sized> {
    pub weights: WeightVector,
    pub scalarization: Scalarization,
    pub epsilon: f64,
    pub rng: &'r mut R,
}

fn input_matrix(samples: &[SampleTuple], t: usize) -> Array2<f64> {
    let mut inputs = Array2::zeros((samples.len(), StateFeatures::input_dim(t)));
    for (tuple, mut row) in samples.iter().zip(inputs.rows_mut()) {
        tuple.s.write_input(tuple.a, row.as_slice_mut().expect("contiguous row"));
    }
    inputs
}

fn predict_or_zero(net: Option<&Mlp>, inputs: ArrayView2<f64>, output_dim: usize) -> Array2<f64> {
    match net {
        Some(net) => net.forward_batch(inputs).expect("feature dim matches architecture"),
        None => Array2::zeros((inputs.nrows(), output_dim)),
    }
}

/// `Q^next(s', a')` for all seven actions of every non-terminal tuple, laid
/// out as `NUM_ACTIONS` consecutive rows per tuple.
fn next_values_all_actions(samples: &[SampleTuple], ctx: &TargetContext) -> Array2<f64> {
    let Some(first) = samples.first().and_then(|s| s.s_next.as_ref()) else {
        return Array2::zeros((0, ctx.reward.output_dim()));
    };
    let dim = StateFeatures::input_dim(first.t());
    let mut inputs = Array2::zeros((samples.len() * NUM_ACTIONS, dim));
    for (k, tuple) in samples.iter().enumerate() {
        let s_next = tuple.s_next.as_ref().expect("non-terminal step");
        for a in Action::all() {
            let mut row = inputs.row_mut(k * NUM_ACTIONS + a.index());
            s_next.write_input(a, row.as_slice_mut().expect("contiguous row"));
        }
    }
    predict_or_zero(ctx.next, inputs.view(), ctx.reward.output_dim())
}

fn assemble(
    samples: &[SampleTuple],
    t: usize,
    ctx: &TargetContext,
    bootstrap: Option<Array2<f64>>,
) -> TargetSet {
    let out_dim = ctx.reward.output_dim();
    let inputs = input_matrix(samples, t);
    let old = predict_or_zero(ctx.old, inputs.view(), out_dim);
    let mut bracket = Array2::zeros((samples.len(), out_dim));
    for (tuple, mut row) in samples.iter().zip(bracket.rows_mut()) {
        ctx.reward.write(&tuple.reward, row.as_slice_mut().expect("contiguous row"));
    }
    if let Some(b) = bootstrap {
        bracket.scaled_add(ctx.update.gamma, &b);
    }
    let UpdateConfig { alpha, .. } = ctx.update;
    // Written as q + α(b - q), which equals (1 - α) q + α b and leaves q
    // untouched bit-for-bit when b == q.
    let mut targets = old;
    Zip::from(&mut targets)
        .and(&bracket)
        .for_each(|q, &b| *q += alpha * (b - *q));
    TargetSet { inputs, targets }
}

/// Off-policy targets for every tuple stored at step `t`.
pub fn build_targets_off_policy(memory: &SampleMemory, t: usize, ctx: &TargetContext) -> TargetSet {
    let samples = memory.at(t);
    let terminal = samples.first().is_none_or(|s| s.s_next.is_none());
    let bootstrap = (!terminal).then(|| {
        let all = next_values_all_actions(samples, ctx);
        let out_dim = ctx.reward.output_dim();
        let mut best = Array2::from_elem((samples.len(), out_dim), f64::NEG_INFINITY);
        for k in 0..samples.len() {
            for a in 0..NUM_ACTIONS {
                for i in 0..out_dim {
                    let v = all[[k * NUM_ACTIONS + a, i]];
                    if v > best[[k, i]] {
                        best[[k, i]] = v;
                    }
                }
            }
        }
        best
    });
    assemble(samples, t, ctx, bootstrap)
}

/// On-policy targets for every tuple stored at step `t`. One bootstrap
/// action is drawn per tuple and shared by all components.
pub fn build_targets_on_policy<R: Rng + ?Sized>(
    memory: &SampleMemory,
    t: usize,
    ctx: &TargetContext,
    policy: &mut ExplorativePolicy<'_, R>,
) -> TargetSet {
    let samples = memory.at(t);
    let terminal = samples.first().is_none_or(|s| s.s_next.is_none());
    let bootstrap = (!terminal).then(|| {
        let all = next_values_all_actions(samples, ctx);
        let out_dim = ctx.reward.output_dim();
        let mut chosen = Array2::zeros((samples.len(), out_dim));
        for k in 0..samples.len() {
            let rows = all.slice(ndarray::s![k * NUM_ACTIONS..(k + 1) * NUM_ACTIONS, ..]);
            let goal = greedy_action(rows, &policy.weights, policy.scalarization);
            let a = explore_policy(goal, policy.epsilon, policy.rng);
            chosen.row_mut(k).assign(&rows.row(a.index()));
        }
        chosen
    });
    assemble(samples, t, ctx, bootstrap)
}

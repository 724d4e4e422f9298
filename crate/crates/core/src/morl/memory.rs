use crate::env::{Action, RewardVector, HORIZON};

/// History-based agent state at decision step `t`: normalized observations
/// `o_0..o_t` interleaved with normalized previous actions `u_0..u_{t-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFeatures {
    t: usize,
    values: Vec<f64>,
}

impl StateFeatures {
    /// Feature length at step `t`.
    pub const fn dim(t: usize) -> usize {
        3 * (t + 1) + t
    }

    /// Input length of the step-`t` Q-network (features plus action).
    pub const fn input_dim(t: usize) -> usize {
        Self::dim(t) + 1
    }

    pub fn initial(observation: [f64; 3]) -> Self {
        StateFeatures {
            t: 0,
            values: observation.to_vec(),
        }
    }

    /// Features at `t + 1` after taking `action` and observing `observation`.
    pub fn advance(&self, action: Action, observation: [f64; 3]) -> Self {
        let mut values = Vec::with_capacity(Self::dim(self.t + 1));
        values.extend_from_slice(&self.values);
        values.push(action.normalized());
        values.extend_from_slice(&observation);
        StateFeatures {
            t: self.t + 1,
            values,
        }
    }

    pub fn from_raw(t: usize, values: Vec<f64>) -> Option<Self> {
        (t < HORIZON && values.len() == Self::dim(t)).then_some(StateFeatures { t, values })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Writes `features ⊕ action` into `out`, which must have length
    /// [`StateFeatures::input_dim`].
    pub fn write_input(&self, action: Action, out: &mut [f64]) {
        out[..self.values.len()].copy_from_slice(&self.values);
        out[self.values.len()] = action.normalized();
    }
}

/// One stored transition `(t, s, a, s', reward)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTuple {
    pub t: usize,
    pub s: StateFeatures,
    pub a: Action,
    /// `None` at the terminal step.
    pub s_next: Option<StateFeatures>,
    pub reward: RewardVector,
}

/// All transitions collected so far, grouped by decision step.
///
/// Tuples are append-only and persist across the tasks of a sequence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleMemory {
    per_step: [Vec<SampleTuple>; HORIZON],
}

impl SampleMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, tuple: SampleTuple) {
        debug_assert_eq!(tuple.s_next.is_none(), tuple.t + 1 == HORIZON);
        self.per_step[tuple.t].push(tuple);
    }

    /// Stores the `HORIZON` transitions of one completed episode.
    pub fn push_episode(&mut self, states: &[StateFeatures], actions: &[Action], reward: RewardVector) {
        assert_eq!(states.len(), HORIZON);
        assert_eq!(actions.len(), HORIZON);
        for t in 0..HORIZON {
            let terminal = t + 1 == HORIZON;
            self.push(SampleTuple {
                t,
                s: states[t].clone(),
                a: actions[t],
                s_next: (!terminal).then(|| states[t + 1].clone()),
                reward: if terminal { reward } else { RewardVector::ZERO },
            });
        }
    }

    pub fn at(&self, t: usize) -> &[SampleTuple] {
        &self.per_step[t]
    }

    pub fn len_at(&self, t: usize) -> usize {
        self.per_step[t].len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_step.iter().all(Vec::is_empty)
    }
}

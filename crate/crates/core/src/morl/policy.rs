use ndarray::ArrayView2;
use rand::Rng;

use super::memory::StateFeatures;
use super::qnet::QNetSet;
use super::{Scalarization, WeightVector};
use crate::env::Action;

/// Index of the row with the largest scalarized value; ties go to the
/// lowest action index.
pub fn greedy_action(q_rows: ArrayView2<f64>, w: &WeightVector, f: Scalarization) -> Action {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, row) in q_rows.rows().into_iter().enumerate() {
        let v = f.value(row.as_slice().expect("contiguous row"), w);
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    Action::new(best).expect("one row per action")
}

/// `argmax_a f(Q_t(s, a), w)`.
pub fn goal_policy(q: &QNetSet, s: &StateFeatures, w: &WeightVector, f: Scalarization) -> Action {
    greedy_action(q.predict_all_actions(s).view(), w, f)
}

/// ε-greedy expansion of the goal policy: with probability `epsilon` a
/// uniformly random action, otherwise `goal`.
pub fn explore_policy<R: Rng + ?Sized>(goal: Action, epsilon: f64, rng: &mut R) -> Action {
    if rng.random::<f64>() < epsilon {
        Action::uniform(rng)
    } else {
        goal
    }
}

/// `ε_i = ε_0 exp(-λ i)`.
pub fn epsilon_schedule(episode: usize, epsilon0: f64, lambda: f64) -> f64 {
    epsilon0 * (-lambda * episode as f64).exp()
}

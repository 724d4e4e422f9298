use serde::{Deserialize, Serialize};

use super::{MorlError, WeightVector};
use crate::env::RewardVector;

/// Reward components that are exactly zero are lifted to this value before
/// the harmonic mean is taken, so a clamped-to-zero objective yields a tiny
/// rather than undefined scalar.
pub const ZERO_REWARD_NUDGE: f64 = 1e-6;

/// Function mapping a reward or Q vector and weights to a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scalarization {
    #[default]
    Harmonic,
    Arithmetic,
}

impl Scalarization {
    pub fn apply(self, r: [f64; 2], w: &WeightVector) -> f64 {
        match self {
            Scalarization::Harmonic => scalarize_harmonic(r, w),
            Scalarization::Arithmetic => scalarize_arithmetic(r, w),
        }
    }

    /// Scalar value of a network output: two-component outputs are
    /// scalarized, single-component (already scalar) outputs pass through.
    pub fn value(self, q: &[f64], w: &WeightVector) -> f64 {
        match q {
            [v] => *v,
            [a, b] => self.apply([*a, *b], w),
            _ => panic!("Q output must have 1 or 2 components, got {}", q.len()),
        }
    }

    /// Scalarized terminal reward, with exact zeros nudged.
    pub fn reward(self, r: &RewardVector, w: &WeightVector) -> f64 {
        let nudge = |v: f64| if v == 0.0 { ZERO_REWARD_NUDGE } else { v };
        self.apply([nudge(r.infeed), nudge(r.thickness)], w)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scalarization::Harmonic => "harmonic",
            Scalarization::Arithmetic => "arithmetic",
        }
    }
}

impl std::str::FromStr for Scalarization {
    type Err = MorlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "harmonic" => Ok(Scalarization::Harmonic),
            "arithmetic" => Ok(Scalarization::Arithmetic),
            other => Err(MorlError::InvalidConfig(format!("unknown scalarization {other:?}"))),
        }
    }
}

/// Weighted harmonic mean `(w1 + w2) / (w1 / r1 + w2 / r2)`; zero when any
/// component is non-positive.
pub fn scalarize_harmonic(r: [f64; 2], w: &WeightVector) -> f64 {
    if r[0] <= 0.0 || r[1] <= 0.0 {
        return 0.0;
    }
    let [w1, w2] = w.as_array();
    (w1 + w2) / (w1 / r[0] + w2 / r[1])
}

/// Weighted arithmetic mean `(w1 r1 + w2 r2) / (w1 + w2)`.
pub fn scalarize_arithmetic(r: [f64; 2], w: &WeightVector) -> f64 {
    let [w1, w2] = w.as_array();
    (w1 * r[0] + w2 * r[1]) / (w1 + w2)
}

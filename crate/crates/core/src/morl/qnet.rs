use ndarray::Array2;

use super::memory::StateFeatures;
use crate::env::{Action, HORIZON, NUM_ACTIONS};
use crate::neural::{Mlp, MlpArchitecture};

/// Hidden layer widths of the step-`t` Q-network: one layer of 5 units at
/// `t = 0`, two of 10 at `t = 1`, two of 50 afterwards.
pub fn hidden_layers_for(t: usize) -> Vec<usize> {
    match t {
        0 => vec![5],
        1 => vec![10, 10],
        _ => vec![50, 50],
    }
}

pub fn architecture_for(t: usize, output_dim: usize) -> MlpArchitecture {
    MlpArchitecture::new(StateFeatures::input_dim(t), hidden_layers_for(t), output_dim)
}

/// Time-indexed Q-function approximators `Q_0..Q_4`.
///
/// A missing network (never trained, no samples at that step) predicts the
/// zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetSet {
    nets: Vec<Option<Mlp>>,
    output_dim: usize,
    generation: u32,
}

impl QNetSet {
    pub fn untrained(output_dim: usize) -> Self {
        QNetSet {
            nets: vec![None; HORIZON],
            output_dim,
            generation: 0,
        }
    }

    pub fn from_nets(nets: Vec<Option<Mlp>>, output_dim: usize, generation: u32) -> Self {
        assert_eq!(nets.len(), HORIZON);
        for (t, net) in nets.iter().enumerate() {
            if let Some(net) = net {
                assert_eq!(net.architecture().input_dim, StateFeatures::input_dim(t));
                assert_eq!(net.architecture().output_dim, output_dim);
            }
        }
        QNetSet {
            nets,
            output_dim,
            generation,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn net(&self, t: usize) -> Option<&Mlp> {
        self.nets[t].as_ref()
    }

    pub fn is_trained(&self, t: usize) -> bool {
        self.nets[t].is_some()
    }

    /// `Q_t(s, a)`.
    pub fn predict(&self, s: &StateFeatures, a: Action) -> Vec<f64> {
        let t = s.t();
        let mut input = vec![0.0; StateFeatures::input_dim(t)];
        s.write_input(a, &mut input);
        match &self.nets[t] {
            Some(net) => net.forward(&input).expect("feature dim matches architecture"),
            None => vec![0.0; self.output_dim],
        }
    }

    /// `Q_t(s, a)` for every action, one row per action index.
    pub fn predict_all_actions(&self, s: &StateFeatures) -> Array2<f64> {
        predict_all_actions(self.nets[s.t()].as_ref(), s, self.output_dim)
    }
}

pub(crate) fn predict_all_actions(net: Option<&Mlp>, s: &StateFeatures, output_dim: usize) -> Array2<f64> {
    let Some(net) = net else {
        return Array2::zeros((NUM_ACTIONS, output_dim));
    };
    let dim = StateFeatures::input_dim(s.t());
    let mut inputs = Array2::zeros((NUM_ACTIONS, dim));
    for (a, mut row) in Action::all().zip(inputs.rows_mut()) {
        s.write_input(a, row.as_slice_mut().expect("contiguous row"));
    }
    net.forward_batch(inputs.view()).expect("feature dim matches architecture")
}

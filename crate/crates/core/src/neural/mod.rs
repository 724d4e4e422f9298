//! Multi-output feed-forward regressors used as per-timestep Q-function
//! approximators.

mod lbfgs;
mod mlp;
mod snapshot;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lbfgs::{gradient_descent, lbfgs, MinimizeSettings, Minimum};
pub use mlp::{loss_and_gradient, mlp_loss_grad, Activation, Mlp, MlpArchitecture};
pub use snapshot::{read_snapshot, write_snapshot};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("training diverged")]
    Diverged,
    #[error("non-finite parameters")]
    NonFinite,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    Lbfgs,
    FullBatchGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// L-BFGS curvature pairs kept.
    pub history_size: usize,
    /// Fixed step of the gradient-descent fallback.
    pub learning_rate: f64,
    pub init_scale: f64,
    pub init_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::Lbfgs,
            max_iterations: 400,
            gradient_tolerance: 1e-6,
            history_size: 10,
            learning_rate: 0.1,
            init_scale: 0.3,
            init_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::InvalidConfig(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1");
        }
        if !(self.gradient_tolerance > 0.0) {
            return bad("gradient_tolerance must be > 0");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be >= 0");
        }
        Ok(())
    }

    pub fn with_seed(&self, init_seed: u64) -> Self {
        TrainConfig {
            init_seed,
            ..self.clone()
        }
    }

    fn settings(&self) -> MinimizeSettings {
        MinimizeSettings {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            history_size: self.history_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub net: Mlp,
    pub loss: f64,
    pub iterations: usize,
    /// Loss after each accepted optimizer iterate.
    pub trace: Vec<f64>,
}

/// Fits a freshly initialized network to `targets` by minimizing the mean
/// squared error over the whole batch.
pub fn train(
    arch: &MlpArchitecture,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, NeuralError> {
    arch.validate()?;
    cfg.validate()?;
    if inputs.nrows() == 0 {
        return Err(NeuralError::EmptyBatch);
    }
    if inputs.ncols() != arch.input_dim {
        return Err(NeuralError::DimensionMismatch {
            expected: arch.input_dim,
            got: inputs.ncols(),
        });
    }
    if targets.ncols() != arch.output_dim || targets.nrows() != inputs.nrows() {
        return Err(NeuralError::DimensionMismatch {
            expected: arch.output_dim,
            got: targets.ncols(),
        });
    }
    let x0 = Mlp::init(arch.clone(), cfg).params().to_vec();
    let objective = |p: &[f64], g: &mut [f64]| loss_and_gradient(arch, p, inputs, targets, g);
    let min = match cfg.optimizer {
        Optimizer::Lbfgs => lbfgs(x0, objective, &cfg.settings())?,
        Optimizer::FullBatchGradient => {
            gradient_descent(x0, objective, cfg.learning_rate, &cfg.settings())?
        }
    };
    if !min.value.is_finite() {
        return Err(NeuralError::Diverged);
    }
    Ok(TrainOutcome {
        net: Mlp::from_params(arch.clone(), min.x)?,
        loss: min.value,
        iterations: min.iterations,
        trace: min.trace,
    })
}

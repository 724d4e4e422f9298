//! Experiment configuration.
//!
//! Files are TOML. Sections may be written as tables or as dotted keys
//! (`task.episodes = 1000`); unknown keys are rejected. Every field has a
//! default, so an empty file is a valid configuration. The manifest written
//! by `run` is a fully resolved configuration in the same format.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use morl_core::morl::{Scalarization, TaskConfig, UpdateRule, WeightVector};
use morl_core::neural::{Optimizer, TrainConfig};
use morl_core::sim::{calibrate_rewards, RewardCalibration, SurrogateParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub task: TaskSection,
    pub training: TrainingSection,
    pub surrogate: SurrogateSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub seeds: usize,
    pub base_seed: u64,
    pub sequence_length: usize,
    /// `off` or `on`.
    pub update_rule: String,
    /// `harmonic` or `arithmetic`.
    pub scalarization: String,
    /// Also run the single-objective baseline, one independent task per
    /// sequence position.
    pub baseline: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            seeds: 20,
            base_seed: 1,
            sequence_length: 4,
            update_rule: "off".into(),
            scalarization: "harmonic".into(),
            baseline: true,
            output_dir: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSection {
    pub episodes: usize,
    pub retrain_interval: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon0: f64,
    pub lambda: f64,
}

impl Default for TaskSection {
    fn default() -> Self {
        let p = TaskConfig::protocol(WeightVector::new(5.0, 5.0).expect("positive"));
        TaskSection {
            episodes: p.episodes,
            retrain_interval: p.retrain_interval,
            alpha: p.alpha,
            gamma: p.gamma,
            epsilon0: p.epsilon0,
            lambda: p.lambda,
        }
    }
}

/// Network training settings. The initialization seed is not configurable
/// here; it is derived from the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub optimizer: Optimizer,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub history_size: usize,
    pub learning_rate: f64,
    pub init_scale: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainingSection {
            optimizer: t.optimizer,
            // Desk-scale budget; the library default is larger.
            max_iterations: 30,
            gradient_tolerance: t.gradient_tolerance,
            history_size: t.history_size,
            learning_rate: t.learning_rate,
            init_scale: t.init_scale,
        }
    }
}

/// Surrogate constants. Noise levels and reward calibration are derived from
/// the other constants unless given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurrogateSection {
    pub draw_demand_per_step: f64,
    pub restraint_scale: f64,
    pub thinning_coeff: f64,
    pub force_gain: f64,
    pub stretch_force_coeff: f64,
    pub holder_stiffness: f64,
    pub friction_scale: f64,
    pub initial_thickness: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigmas: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward_calibration: Option<RewardCalibration>,
}

impl Default for SurrogateSection {
    fn default() -> Self {
        let p = SurrogateParams::default();
        SurrogateSection {
            draw_demand_per_step: p.draw_demand_per_step,
            restraint_scale: p.restraint_scale,
            thinning_coeff: p.thinning_coeff,
            force_gain: p.force_gain,
            stretch_force_coeff: p.stretch_force_coeff,
            holder_stiffness: p.holder_stiffness,
            friction_scale: p.friction_scale,
            initial_thickness: p.initial_thickness,
            noise_sigmas: None,
            reward_calibration: None,
        }
    }
}

impl SurrogateSection {
    pub fn params(&self) -> Result<SurrogateParams> {
        let mut p = SurrogateParams {
            draw_demand_per_step: self.draw_demand_per_step,
            restraint_scale: self.restraint_scale,
            thinning_coeff: self.thinning_coeff,
            force_gain: self.force_gain,
            stretch_force_coeff: self.stretch_force_coeff,
            holder_stiffness: self.holder_stiffness,
            friction_scale: self.friction_scale,
            initial_thickness: self.initial_thickness,
            noise_sigmas: [0.0; 3],
            reward_calibration: RewardCalibration {
                infeed: (0.0, 1.0),
                thickness: (0.0, 1.0),
            },
        };
        p.noise_sigmas = self.noise_sigmas.unwrap_or_else(|| p.default_noise_sigmas());
        p.reward_calibration = match self.reward_calibration {
            Some(c) => c,
            None => calibrate_rewards(&p),
        };
        p.validate().map_err(|e| anyhow!("invalid surrogate parameters: {e}"))?;
        Ok(p)
    }
}

/// Raised when the configuration file does not exist.
#[derive(Debug)]
pub struct MissingConfig(pub PathBuf);

impl std::fmt::Display for MissingConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config file not found: {}", self.0.display())
    }
}

impl std::error::Error for MissingConfig {}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(MissingConfig(path.to_path_buf()).into());
        }
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Loads `path` when given, else the defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.update_rule()?;
        self.scalarization()?;
        if self.experiment.sequence_length == 0 {
            bail!("experiment.sequence_length must be >= 1");
        }
        if self.task.episodes == 0 {
            bail!("task.episodes must be >= 1");
        }
        self.task_template().validate()?;
        self.train_config(0).validate()?;
        Ok(())
    }

    pub fn update_rule(&self) -> Result<UpdateRule> {
        self.experiment.update_rule.parse().map_err(|e: String| anyhow!(e))
    }

    pub fn scalarization(&self) -> Result<Scalarization> {
        Ok(self.experiment.scalarization.parse()?)
    }

    /// Task settings with placeholder weights.
    pub fn task_template(&self) -> TaskConfig {
        let t = &self.task;
        TaskConfig {
            weights: WeightVector::new(5.0, 5.0).expect("positive"),
            episodes: t.episodes,
            retrain_interval: t.retrain_interval,
            alpha: t.alpha,
            gamma: t.gamma,
            epsilon0: t.epsilon0,
            lambda: t.lambda,
            update_rule: self.update_rule().unwrap_or_default(),
        }
    }

    pub fn train_config(&self, init_seed: u64) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            optimizer: t.optimizer,
            max_iterations: t.max_iterations,
            gradient_tolerance: t.gradient_tolerance,
            history_size: t.history_size,
            learning_rate: t.learning_rate,
            init_scale: t.init_scale,
            init_seed,
        }
    }

    /// Copy with noise levels and calibration filled in, so that the result
    /// no longer depends on derivation code.
    pub fn resolved(&self) -> Result<Self> {
        let p = self.surrogate.params()?;
        let mut out = self.clone();
        out.surrogate.noise_sigmas = Some(p.noise_sigmas);
        out.surrogate.reward_calibration = Some(p.reward_calibration);
        Ok(out)
    }

    /// Flat `section.key = value` rendering, keys sorted within sections.
    pub fn to_toml(&self) -> Result<String> {
        let table = toml::Table::try_from(self)?;
        let mut out = String::new();
        for (section, body) in &table {
            let toml::Value::Table(body) = body else {
                bail!("unexpected top-level value {section}");
            };
            for (key, value) in body {
                out.push_str(&format!("{section}.{key} = {value}\n"));
            }
        }
        Ok(out)
    }
}

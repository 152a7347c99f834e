//! PPO training of the adapter.

mod gae;
mod loss;
mod policy;
mod rollout;
mod trainer;

use thiserror::Error;

pub use gae::compute_gae;
pub use loss::{
    clip_objective, clipped_surrogate, normalize_advantages, ppo_loss, ppo_loss_and_gradients,
    value_objective, LossCoefficients, LossStats,
};
pub use policy::AdaptedPolicy;
pub use rollout::{collect_rollout, EpisodeStats, RolloutBatch, RolloutEnvs};
pub use trainer::{
    train, train_iteration, IterationMetrics, TrainOutcome, TrainSpec, UpdateStats,
    FINAL_CHECKPOINT, METRICS_FILE, METRICS_HEADER,
};

use crate::env::EnvError;
use crate::mixer::MixerError;
use crate::net::NetError;

#[derive(Debug, Error)]
pub enum PpoError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Mixer(#[from] MixerError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("non-finite probability ratio at sample {0}")]
    NonFiniteRatio(usize),
    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),
    #[error("invalid PPO config: {0}")]
    Config(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip_eps: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    /// Transitions per iteration (`T`).
    pub samples_per_iteration: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub normalize_advantages: bool,
    pub num_envs: usize,
    pub shaping: bool,
    /// Swap the learner's side every episode.
    pub alternate_sides: bool,
    pub checkpoint_every: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            lambda: 0.95,
            clip_eps: 0.2,
            value_coef: 1.0,
            entropy_coef: 0.01,
            learning_rate: 2.5e-4,
            iterations: 100,
            samples_per_iteration: 2048,
            epochs: 4,
            minibatch_size: 256,
            normalize_advantages: true,
            num_envs: 8,
            shaping: false,
            alternate_sides: true,
            checkpoint_every: 10,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: &str| Err(PpoError::Config(m.to_owned()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("lambda must lie in (0, 1]");
        }
        if !(self.clip_eps > 0.0) {
            return bad("clip epsilon must be positive");
        }
        if !(self.value_coef >= 0.0) || !(self.entropy_coef >= 0.0) {
            return bad("loss coefficients must be non-negative");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.iterations == 0 || self.epochs == 0 {
            return bad("iterations and epochs must be positive");
        }
        if self.minibatch_size == 0
            || !self
                .samples_per_iteration
                .is_multiple_of(self.minibatch_size)
        {
            return bad("samples per iteration must be a positive multiple of the minibatch size");
        }
        if self.num_envs == 0 || !self.samples_per_iteration.is_multiple_of(self.num_envs) {
            return bad("samples per iteration must split evenly over the environments");
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint interval must be positive");
        }
        Ok(())
    }

    pub fn loss_coefficients(&self) -> LossCoefficients {
        LossCoefficients {
            clip_eps: self.clip_eps,
            value_coef: self.value_coef,
            entropy_coef: self.entropy_coef,
        }
    }
}

/// SplitMix64 over `seed` and `tag`; used to derive independent streams.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

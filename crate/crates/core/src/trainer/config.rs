use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::losses::LossWeights;
use crate::models::{GeneratorConfig, TrunkConfig, Variant};
use crate::optim::AdamConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub g_lr0: f64,
    pub d_lr0: f64,
    /// Multiplicative drop applied every `decay_every` epochs.
    pub lr_decay: f64,
    pub decay_every: u64,
    pub epochs: u64,
    pub n_critic: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Generator steps between FID evaluations (0 disables).
    pub eval_every: u64,
    /// Images per side of each FID evaluation.
    pub fid_samples: usize,
    pub weights: LossWeights,
    pub generator: GeneratorConfig,
    pub discriminator: TrunkConfig,
    /// Digit records used for training (all when absent).
    pub subset: Option<usize>,
    /// Stop after this many steps (a final checkpoint is still written).
    pub max_steps: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 100,
            g_lr0: 5e-2,
            d_lr0: 8e-2,
            lr_decay: 0.9,
            decay_every: 5,
            epochs: 40,
            n_critic: 1,
            adam: AdamConfig::default(),
            seed: 0,
            eval_every: 500,
            fid_samples: 10_000,
            weights: LossWeights::default(),
            generator: GeneratorConfig::full(Variant::Icgan),
            discriminator: TrunkConfig::full(),
            subset: None,
            max_steps: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.batch_size == 0 || self.n_critic == 0 || self.decay_every == 0 {
            return Err(domain("batch_size, n_critic and decay_every must be positive"));
        }
        if !(self.g_lr0 > 0.0 && self.d_lr0 > 0.0) {
            return Err(domain("learning rates must be positive"));
        }
        if self.g_lr0 >= self.d_lr0 {
            log::warn!("g_lr0 {} >= d_lr0 {}: two-time-scale ordering reversed", self.g_lr0, self.d_lr0);
        }
        Ok(())
    }

    pub fn lr(&self, lr0: f64, epoch: u64) -> f64 {
        lr0 * self.lr_decay.powi((epoch / self.decay_every) as i32)
    }
}

/// `lr0 · 0.9^⌊epoch / 5⌋`.
pub fn lr_schedule(lr0: f64, epoch: u64) -> f64 {
    lr0 * 0.9f64.powi((epoch / 5) as i32)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub adam: AdamConfig,
    pub max_epochs: u64,
    /// Stop once test accuracy reaches this.
    pub target_accuracy: f64,
    pub seed: u64,
    pub trunk: TrunkConfig,
    /// Class-balanced training subset size (all records when absent).
    pub subset: Option<usize>,
    /// Test records evaluated after each epoch (all when absent).
    pub test_subset: Option<usize>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            batch_size: 100,
            lr: 1e-2,
            adam: AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 },
            max_epochs: 10,
            target_accuracy: 0.994,
            seed: 0,
            trunk: TrunkConfig::full(),
            subset: None,
            test_subset: None,
        }
    }
}

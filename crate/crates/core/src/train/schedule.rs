use serde::{Deserialize, Serialize};

use super::loss::LossKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub initial_lr: f64,
    /// Epochs between decays; 0 disables decay.
    pub lr_decay_steps: usize,
    pub lr_decay_rate: f64,
    pub warmup_steps: usize,
    #[serde(default)]
    pub weight_decay: f64,
    pub max_epochs: usize,
    #[serde(default)]
    pub seed: u64,
    pub loss: LossKind,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.initial_lr >= 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::Config(format!("initial_lr {} is invalid", self.initial_lr)));
        }
        if !(self.lr_decay_rate > 0.0 && self.lr_decay_rate <= 1.0) {
            return Err(Error::Config(format!(
                "lr_decay_rate {} outside (0, 1]",
                self.lr_decay_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!("weight_decay {} is invalid", self.weight_decay)));
        }
        Ok(())
    }
}

/// Linear warmup over `warmup_steps` epochs, then step decay every
/// `lr_decay_steps` epochs.
pub fn lr_at(epoch: usize, tc: &TrainConfig) -> f64 {
    if epoch < tc.warmup_steps {
        return tc.initial_lr * (epoch + 1) as f64 / tc.warmup_steps as f64;
    }
    if tc.lr_decay_steps == 0 {
        return tc.initial_lr;
    }
    let decays = (epoch - tc.warmup_steps) / tc.lr_decay_steps;
    tc.initial_lr * tc.lr_decay_rate.powi(decays as i32)
}

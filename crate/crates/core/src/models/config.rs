use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

/// Minibatch SGD settings shared by every trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub hidden: usize,
    pub seed: u64,
    /// Accuracy below which a training-quality warning is emitted.
    pub quality_floor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 60, batch_size: 32, lr: 1e-3, hidden: 64, seed: 0, quality_floor: 0.85 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 {
            return Err(config_err("epochs, batch size and hidden width must be positive"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(config_err(format!("learning rate must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

/// Which attribute vectors condition the decoder inside the discrimination term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeSampling {
    /// Attributes drawn from the training marginal, independently of the instance.
    Marginal,
    /// Each instance's own attributes.
    Paired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerativeConfig {
    pub train: TrainConfig,
    /// Raw-feature latent width `k`.
    pub latent_dim: usize,
    /// Weight of the discrimination term against the reconstruction term.
    pub lambda: f64,
    pub attribute_sampling: AttributeSampling,
}

impl Default for GenerativeConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig { epochs: 80, ..TrainConfig::default() },
            latent_dim: 8,
            lambda: 1.0,
            attribute_sampling: AttributeSampling::Marginal,
        }
    }
}

impl GenerativeConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.latent_dim == 0 {
            return Err(config_err("latent dimension must be positive"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(config_err("lambda must be a non-negative finite number"));
        }
        Ok(())
    }
}

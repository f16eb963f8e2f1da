use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

/// Settings of the latent search and its input-space relatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AipConfig {
    /// Weight of the closeness penalty against the prediction loss.
    pub alpha: f64,
    /// Initial step size on `z` (and on `x` for input-space descent).
    pub mu0: f64,
    /// Initial step size on `a`.
    pub gamma0: f64,
    /// Per-iteration decay of both step sizes, in `(0, 1]`.
    pub beta: f64,
    pub n_max: usize,
    /// Desired class. `None` means "the other class" and requires two classes.
    pub desired: Option<usize>,
    /// When false the attribute part stays at `a0` and only `z` moves (attribute-free
    /// latent search).
    pub optimize_attributes: bool,
    /// Keep every latent iterate in the result.
    pub record_trajectory: bool,
}

impl AipConfig {
    /// Hyperparameters used for the text-analog experiments.
    pub fn text_defaults() -> Self {
        Self {
            alpha: 0.8,
            mu0: 1.0,
            gamma0: 2.0,
            beta: 0.95,
            n_max: 300,
            desired: None,
            optimize_attributes: true,
            record_trajectory: false,
        }
    }

    /// Hyperparameters used for the image-analog experiments.
    pub fn image_defaults() -> Self {
        Self { alpha: 1.5, mu0: 2.0, gamma0: 3.0, beta: 0.9, n_max: 500, ..Self::text_defaults() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(config_err(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if !(self.mu0.is_finite() && self.mu0 >= 0.0 && self.gamma0.is_finite() && self.gamma0 >= 0.0) {
            return Err(config_err("step sizes must be non-negative finite numbers"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(config_err(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if self.n_max == 0 {
            return Err(config_err("n_max must be at least 1"));
        }
        Ok(())
    }

    /// `(mu0 * beta^n, gamma0 * beta^n)`.
    pub fn step_sizes(&self, n: usize) -> (f64, f64) {
        let decay = self.beta.powi(n as i32);
        (self.mu0 * decay, self.gamma0 * decay)
    }

    /// The desired class for a query currently predicted as `predicted`.
    pub fn desired_for(&self, predicted: usize, classes: usize) -> Result<usize> {
        match self.desired {
            Some(c) if c < classes => Ok(c),
            Some(c) => Err(config_err(format!("desired class {c} out of range for {classes} classes"))),
            None if classes == 2 => Ok(1 - predicted),
            None => Err(config_err("a desired class must be given when there are more than two classes")),
        }
    }
}

impl Default for AipConfig {
    fn default() -> Self {
        Self::image_defaults()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_defaults() {
        let t = AipConfig::text_defaults();
        assert_eq!((t.alpha, t.beta, t.n_max, t.mu0, t.gamma0), (0.8, 0.95, 300, 1.0, 2.0));
        let i = AipConfig::image_defaults();
        assert_eq!((i.alpha, i.beta, i.n_max, i.mu0, i.gamma0), (1.5, 0.9, 500, 2.0, 3.0));
    }

    #[test]
    fn desired_class_resolution() {
        let c = AipConfig::default();
        assert_eq!(c.desired_for(0, 2).unwrap(), 1);
        assert_eq!(c.desired_for(1, 2).unwrap(), 0);
        assert!(c.desired_for(0, 3).is_err());
        let fixed = AipConfig { desired: Some(2), ..c };
        assert_eq!(fixed.desired_for(0, 3).unwrap(), 2);
        assert!(fixed.desired_for(0, 2).is_err());
    }

    #[test]
    fn invalid_configs() {
        for bad in [
            AipConfig { beta: 0.0, ..Default::default() },
            AipConfig { beta: 1.5, ..Default::default() },
            AipConfig { n_max: 0, ..Default::default() },
            AipConfig { alpha: -1.0, ..Default::default() },
            AipConfig { mu0: f64::NAN, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Blobs,
    Glyphs,
}

/// How labels are derived from the designated attribute subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelRule {
    /// Reads the designated bits as a binary number (first index least significant),
    /// reduced modulo the class count. A single designated attribute gives `y = a_j`.
    Binary,
    /// Class 1 iff every designated bit is set. Two classes only.
    Conjunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub generator: Generator,
    /// Instance dimension. Must be a perfect square for glyphs.
    pub d: usize,
    /// Attribute count.
    pub t: usize,
    /// Class count.
    pub classes: usize,
    pub n: usize,
    pub seed: u64,
    /// Standard deviation of the isotropic Gaussian noise added to every instance.
    pub noise: f64,
    /// Blobs: distance between the two means of every attribute direction.
    pub separation: f64,
    /// Blobs: standard deviation of the nuisance factors living outside the attribute
    /// directions. Glyphs: amount of base-shape jitter in pixels.
    pub style: f64,
    pub label_attributes: Vec<usize>,
    pub label_rule: LabelRule,
    /// Fractions of rows assigned to train and dev; the remainder is test.
    pub train_fraction: f64,
    pub dev_fraction: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            generator: Generator::Blobs,
            d: 32,
            t: 4,
            classes: 2,
            n: 2000,
            seed: 0,
            noise: 0.3,
            separation: 3.0,
            style: 1.0,
            label_attributes: vec![0],
            label_rule: LabelRule::Binary,
            train_fraction: 0.9,
            dev_fraction: 0.05,
        }
    }
}

impl SynthSpec {
    pub fn glyphs() -> Self {
        Self { generator: Generator::Glyphs, d: 144, noise: 0.05, style: 1.0, ..Self::default() }
    }

    /// The default blob benchmark: 6,000 rows split 5,000 / 500 / 500, labelled by the
    /// conjunction of attributes 0 and 1.
    pub fn blob_benchmark() -> Self {
        Self {
            n: 6000,
            seed: 7,
            label_attributes: vec![0, 1],
            label_rule: LabelRule::Conjunction,
            train_fraction: 5000.0 / 6000.0,
            dev_fraction: 500.0 / 6000.0,
            ..Self::default()
        }
    }

    /// Side of the square raster, if `d` is a perfect square.
    pub fn raster_side(&self) -> Option<usize> {
        let s = (self.d as f64).sqrt().round() as usize;
        (s * s == self.d).then_some(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.t == 0 || self.classes < 2 || self.n == 0 {
            return Err(config_err("d, t and n must be positive and classes at least 2"));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(config_err("noise must be a non-negative finite number"));
        }
        if !(self.style.is_finite() && self.style >= 0.0) || !self.separation.is_finite() {
            return Err(config_err("style and separation must be finite, style non-negative"));
        }
        let fractions_ok = (0.0..=1.0).contains(&self.train_fraction)
            && (0.0..=1.0).contains(&self.dev_fraction)
            && self.train_fraction + self.dev_fraction <= 1.0 + 1e-12;
        if !fractions_ok {
            return Err(config_err("train and dev fractions must lie in [0, 1] and sum to at most 1"));
        }
        if self.label_attributes.is_empty() {
            return Err(config_err("at least one label attribute is required"));
        }
        if let Some(&j) = self.label_attributes.iter().find(|&&j| j >= self.t) {
            return Err(config_err(format!("label attribute {j} out of range for t = {}", self.t)));
        }
        match self.label_rule {
            LabelRule::Conjunction if self.classes != 2 => {
                return Err(config_err("the conjunction label rule needs exactly two classes"))
            }
            LabelRule::Binary if (1usize << self.label_attributes.len().min(63)) < self.classes => {
                return Err(config_err(format!(
                    "{} label attributes cannot address {} classes",
                    self.label_attributes.len(),
                    self.classes
                )))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn label_of(&self, attributes: &[f64]) -> usize {
        match self.label_rule {
            LabelRule::Binary => {
                let code = self
                    .label_attributes
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (bit, &j)| acc | (usize::from(attributes[j] > 0.5) << bit));
                code % self.classes
            }
            LabelRule::Conjunction => usize::from(self.label_attributes.iter().all(|&j| attributes[j] > 0.5)),
        }
    }

    pub(crate) fn split_counts(&self) -> (usize, usize, usize) {
        let train = ((self.n as f64) * self.train_fraction).round() as usize;
        let dev = (((self.n as f64) * self.dev_fraction).round() as usize).min(self.n - train.min(self.n));
        let train = train.min(self.n);
        (train, dev, self.n - train - dev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_rules() {
        let mut spec = SynthSpec { label_attributes: vec![1, 2], classes: 4, ..Default::default() };
        assert_eq!(spec.label_of(&[0.0, 1.0, 1.0, 0.0]), 3);
        assert_eq!(spec.label_of(&[1.0, 0.0, 1.0, 0.0]), 2);
        spec.classes = 2;
        spec.label_rule = LabelRule::Conjunction;
        assert_eq!(spec.label_of(&[0.0, 1.0, 1.0, 0.0]), 1);
        assert_eq!(spec.label_of(&[1.0, 1.0, 0.0, 1.0]), 0);
    }

    #[test]
    fn default_split_is_90_5_5() {
        let spec = SynthSpec { n: 1000, ..Default::default() };
        assert_eq!(spec.split_counts(), (900, 50, 50));
    }

    #[test]
    fn invalid_specs_rejected() {
        let bad = [
            SynthSpec { t: 0, ..Default::default() },
            SynthSpec { noise: -1.0, ..Default::default() },
            SynthSpec { label_attributes: vec![9], ..Default::default() },
            SynthSpec { classes: 4, label_attributes: vec![0], ..Default::default() },
            SynthSpec { train_fraction: 0.8, dev_fraction: 0.3, ..Default::default() },
        ];
        for spec in bad {
            assert!(spec.validate().is_err(), "{spec:?}");
        }
    }
}

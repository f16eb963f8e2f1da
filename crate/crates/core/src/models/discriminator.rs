use super::config::TrainConfig;
use super::supervised::{fit, Head};
use super::target::TrainingScores;
use crate::data::{AttributedDataset, Split};
use crate::error::{config_err, Result};
use crate::nn::{Activation, DenseNetwork};
use crate::rng::seeded;

/// Per-attribute classifier `d -> hidden (relu) -> t (sigmoid)`, trained separately from
/// the target and frozen before generative training.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub network: DenseNetwork,
    pub scores: TrainingScores,
}

impl Discriminator {
    pub fn new(network: DenseNetwork) -> Result<Self> {
        if network.output_activation() != Activation::Sigmoid {
            return Err(config_err("discriminator needs a sigmoid head"));
        }
        Ok(Self { network, scores: TrainingScores::default() })
    }

    pub fn attr_dim(&self) -> usize {
        self.network.output_dim()
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.network.forward_slice(x)?.output().to_vec())
    }

    /// Attributes inferred for an unannotated instance: each probability thresholded at 0.5.
    pub fn predict_attributes(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.probabilities(x)?.into_iter().map(|p| if p > 0.5 { 1.0 } else { 0.0 }).collect())
    }

    /// Mean over attributes of the per-attribute accuracy on `rows`.
    pub fn mean_accuracy(&self, data: &AttributedDataset, rows: &[usize]) -> Result<f64> {
        mean_attribute_accuracy(&self.network, data, rows)
    }
}

fn mean_attribute_accuracy(net: &DenseNetwork, data: &AttributedDataset, rows: &[usize]) -> Result<f64> {
    if rows.is_empty() {
        return Ok(f64::NAN);
    }
    let probs = net.forward(&data.instances().select_rows(rows)?)?;
    let t = data.attr_dim();
    let mut hits = 0usize;
    for (r, &i) in rows.iter().enumerate() {
        for (p, a) in probs.row(r).iter().zip(data.attribute_row(i)) {
            if (*p > 0.5) == (*a > 0.5) {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / (rows.len() * t) as f64)
}

pub fn train_discriminator(data: &AttributedDataset, config: &TrainConfig) -> Result<Discriminator> {
    config.validate()?;
    let train = data.indices(Split::Train);
    if train.is_empty() {
        return Err(config_err("dataset has no training rows"));
    }
    let mut warnings = Vec::new();
    for j in 0..data.attr_dim() {
        let first = data.attribute_row(train[0])[j];
        if train.iter().all(|&i| data.attribute_row(i)[j] == first) {
            warnings.push(format!("attribute {j} is constant ({first}) on the training split"));
        }
    }
    let mut rng = seeded(config.seed);
    let mut net = DenseNetwork::random(
        &[data.dim(), config.hidden, data.attr_dim()],
        &[Activation::Relu, Activation::Sigmoid],
        &mut rng,
    )?;
    let history = fit(&mut net, data.instances(), data.attributes(), &train, Head::Sigmoid, config, &mut rng)?;
    let mut scores = TrainingScores {
        train_accuracy: mean_attribute_accuracy(&net, data, &train)?,
        dev_accuracy: mean_attribute_accuracy(&net, data, &data.indices(Split::Dev))?,
        test_accuracy: mean_attribute_accuracy(&net, data, &data.indices(Split::Test))?,
        loss_history: history,
        warnings,
    };
    let measured = if scores.dev_accuracy.is_nan() { scores.train_accuracy } else { scores.dev_accuracy };
    if measured < config.quality_floor {
        scores.warnings.push(format!(
            "discriminator mean attribute accuracy {measured:.4} is below the quality floor {:.2}",
            config.quality_floor
        ));
    }
    Ok(Discriminator { network: net, scores })
}

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::supervised::{fit, Head};
use crate::data::{AttributedDataset, Split};
use crate::error::{config_err, dim_err, Result};
use crate::nn::{Activation, DenseNetwork};
use crate::rng::seeded;
use crate::tensor::{argmax, Tensor};

/// The frozen classifier under explanation: `d -> hidden (relu) -> C (softmax)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetModel {
    pub classifier: DenseNetwork,
    pub scores: TrainingScores,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingScores {
    #[serde(deserialize_with = "super::float_or_nan")]
    pub train_accuracy: f64,
    #[serde(deserialize_with = "super::float_or_nan")]
    pub dev_accuracy: f64,
    #[serde(deserialize_with = "super::float_or_nan")]
    pub test_accuracy: f64,
    pub loss_history: Vec<f64>,
    pub warnings: Vec<String>,
}

impl TargetModel {
    pub fn new(classifier: DenseNetwork) -> Result<Self> {
        if classifier.output_activation() != Activation::Softmax {
            return Err(config_err("target classifier needs a softmax head"));
        }
        Ok(Self { classifier, scores: TrainingScores::default() })
    }

    pub fn input_dim(&self) -> usize {
        self.classifier.input_dim()
    }

    pub fn classes(&self) -> usize {
        self.classifier.output_dim()
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.classifier.forward_slice(x)?.output().to_vec())
    }

    /// The decision: argmax of the softmax head.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.probabilities(x)?))
    }

    pub fn accuracy(&self, data: &AttributedDataset, split: Split) -> Result<f64> {
        accuracy_on(&self.classifier, data, &data.indices(split))
    }
}

pub(crate) fn accuracy_on(net: &DenseNetwork, data: &AttributedDataset, rows: &[usize]) -> Result<f64> {
    if rows.is_empty() {
        return Ok(f64::NAN);
    }
    let probs = net.forward(&data.instances().select_rows(rows)?)?;
    let hits = rows.iter().enumerate().filter(|&(r, &i)| probs.argmax_row(r) == data.label(i)).count();
    Ok(hits as f64 / rows.len() as f64)
}

/// Trains a fresh classifier on the train split. The result is frozen: no API mutates it.
pub fn train_target(data: &AttributedDataset, config: &TrainConfig) -> Result<TargetModel> {
    config.validate()?;
    let train = data.indices(Split::Train);
    if train.is_empty() {
        return Err(config_err("dataset has no training rows"));
    }
    let mut rng = seeded(config.seed);
    let mut net = DenseNetwork::random(
        &[data.dim(), config.hidden, data.classes()],
        &[Activation::Relu, Activation::Softmax],
        &mut rng,
    )?;
    let history = fit(&mut net, data.instances(), data.labels(), &train, Head::Softmax, config, &mut rng)?;
    let mut scores = TrainingScores {
        train_accuracy: accuracy_on(&net, data, &train)?,
        dev_accuracy: accuracy_on(&net, data, &data.indices(Split::Dev))?,
        test_accuracy: accuracy_on(&net, data, &data.indices(Split::Test))?,
        loss_history: history,
        warnings: Vec::new(),
    };
    let measured = if scores.test_accuracy.is_nan() { scores.train_accuracy } else { scores.test_accuracy };
    if measured < config.quality_floor {
        scores
            .warnings
            .push(format!("target accuracy {measured:.4} is below the quality floor {:.2}", config.quality_floor));
    }
    Ok(TargetModel { classifier: net, scores })
}

/// One-hot tensor for `class` among `classes`, validated.
pub fn desired_one_hot(class: usize, classes: usize) -> Result<Tensor> {
    if class >= classes {
        return Err(dim_err(format!("class {class} out of range for {classes} classes")));
    }
    Ok(crate::tensor::one_hot(class, classes))
}

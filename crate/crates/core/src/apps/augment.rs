use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{AttributedDataset, Split};
use crate::engine::{run_aip, AipConfig};
use crate::error::{config_err, Result};
use crate::metrics::mean_std;
use crate::models::{train_target, GenerativeModel, TargetModel, TrainConfig};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub aip: AipConfig,
    /// Orders the candidate training queries.
    pub seed: u64,
    /// Maximum number of queries tried; `None` tries every training row once.
    pub max_queries: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Augmentation {
    pub dataset: AttributedDataset,
    pub requested: usize,
    pub achieved: usize,
    pub attempted: usize,
    /// Set when fewer than `requested` samples could be generated.
    pub warning: Option<String>,
}

impl Augmentation {
    pub fn is_partial(&self) -> bool {
        self.achieved < self.requested
    }
}

/// Adds up to `n_aug` flipped counterfactuals of randomly ordered training queries to
/// the training split, labelled with the class they were driven to and flagged as
/// synthetic. A shortfall is reported through `warning`, not as an error.
pub fn augment_with_counterfactuals(
    train: &AttributedDataset,
    target: &TargetModel,
    gen: &GenerativeModel,
    n_aug: usize,
    config: &AugmentConfig,
) -> Result<Augmentation> {
    config.aip.validate()?;
    let mut dataset = train.clone();
    if n_aug == 0 {
        return Ok(Augmentation { dataset, requested: 0, achieved: 0, attempted: 0, warning: None });
    }
    let mut candidates: Vec<usize> =
        train.indices(Split::Train).into_iter().filter(|&i| !train.synthetic()[i]).collect();
    if candidates.is_empty() {
        return Err(config_err("augmentation needs training rows to use as queries"));
    }
    candidates.shuffle(&mut seeded(derive_seed(config.seed, 0xA6)));
    if let Some(m) = config.max_queries {
        candidates.truncate(m);
    }
    let (mut xs, mut attrs, mut labels) = (Vec::new(), Vec::new(), Vec::new());
    let mut attempted = 0;
    for &row in &candidates {
        if xs.len() == n_aug {
            break;
        }
        attempted += 1;
        let r = run_aip(target, gen, train.instance(row), train.attribute_row(row), &config.aip)?;
        if r.flipped && r.iterations > 0 {
            attrs.push(r.binarized_attributes());
            labels.push(r.desired_class);
            xs.push(r.x_star);
        }
    }
    let achieved = xs.len();
    dataset.append_synthetic(&xs, &attrs, &labels, Split::Train)?;
    let warning = (achieved < n_aug)
        .then(|| format!("generated {achieved} of {n_aug} requested samples after {attempted} queries"));
    Ok(Augmentation { dataset, requested: n_aug, achieved, attempted, warning })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyStats {
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl AccuracyStats {
    fn from(per_seed: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&per_seed);
        Self { per_seed, mean, std }
    }
}

/// Test accuracy of fresh classifiers trained with and without the augmented rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrainComparison {
    pub seeds: Vec<u64>,
    pub initial: AccuracyStats,
    pub augmented: AccuracyStats,
}

impl RetrainComparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("training_set,mean_accuracy,std_accuracy,seeds\n");
        for (name, s) in [("initial", &self.initial), ("augmented", &self.augmented)] {
            out.push_str(&format!("{name},{},{},{}\n", s.mean, s.std, s.per_seed.len()));
        }
        out
    }
}

/// Trains one classifier per seed on each dataset and evaluates it on that dataset's
/// test split (augmentation only touches the training split, so both share it).
pub fn retrain_comparison(
    initial: &AttributedDataset,
    augmented: &AttributedDataset,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<RetrainComparison> {
    if seeds.is_empty() {
        return Err(config_err("retraining comparison needs at least one seed"));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for &seed in seeds {
        let cfg = TrainConfig { seed, ..config.clone() };
        a.push(train_target(initial, &cfg)?.scores.test_accuracy);
        b.push(train_target(augmented, &cfg)?.scores.test_accuracy);
    }
    Ok(RetrainComparison { seeds: seeds.to_vec(), initial: AccuracyStats::from(a), augmented: AccuracyStats::from(b) })
}

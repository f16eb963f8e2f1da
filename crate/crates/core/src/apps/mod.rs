//! Downstream uses of counterfactuals: ranking which attributes a decision depends on,
//! and enlarging a training set with generated samples.

mod augment;
mod ranking;

pub use augment::{
    augment_with_counterfactuals, retrain_comparison, AccuracyStats, AugmentConfig, Augmentation, RetrainComparison,
};
pub use ranking::{attribute_interaction_ranking, mean_attribute_interaction, ranking_csv, RankedAttribute};

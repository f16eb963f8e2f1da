//! The four networks of the framework: target classifier, attribute discriminator,
//! encoder and attribute-conditioned decoder, with their trainers.

mod config;
mod discriminator;
mod generative;
mod manifest;
mod supervised;
mod target;

pub use config::{AttributeSampling, GenerativeConfig, TrainConfig};
pub use discriminator::{train_discriminator, Discriminator};
pub use generative::{
    attribute_consistency, attribute_toggle_rate, mean_predictor_error, train_generative, GenerativeModel,
    GenerativeScores, LatentPoint,
};
pub use manifest::{Experiment, Manifest, MANIFEST_VERSION};
pub use target::{desired_one_hot, train_target, TargetModel, TrainingScores};

/// Scores of empty splits are NaN, which JSON writes as `null`.
pub(crate) fn float_or_nan<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    use serde::Deserialize;
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Trains the target, then the discriminator, then the generative model against it.
pub fn train_experiment(
    data: &crate::data::AttributedDataset,
    target: &TrainConfig,
    discriminator: &TrainConfig,
    generative: &GenerativeConfig,
) -> crate::Result<Experiment> {
    let target = train_target(data, target)?;
    let discriminator = train_discriminator(data, discriminator)?;
    let generative = train_generative(data, &discriminator, generative)?;
    Ok(Experiment { target, discriminator, generative })
}

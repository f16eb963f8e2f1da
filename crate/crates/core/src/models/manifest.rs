use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{GenerativeConfig, TrainConfig};
use super::discriminator::Discriminator;
use super::generative::{GenerativeModel, GenerativeScores};
use super::target::{TargetModel, TrainingScores};
use crate::error::{config_err, Result};
use crate::nn::DenseNetwork;

pub const MANIFEST_VERSION: u32 = 1;

/// The three trained components of one experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub target: TargetModel,
    pub discriminator: Discriminator,
    pub generative: GenerativeModel,
}

/// JSON file tying together the checkpoints of one experiment with every setting used
/// to produce them. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub dataset: PathBuf,
    pub target: PathBuf,
    pub discriminator: PathBuf,
    pub encoder: PathBuf,
    pub decoder: PathBuf,
    pub attr_dim: usize,
    pub target_config: TrainConfig,
    pub discriminator_config: TrainConfig,
    pub generative_config: GenerativeConfig,
    pub target_scores: TrainingScores,
    pub discriminator_scores: TrainingScores,
    pub generative_scores: GenerativeScores,
    /// Free-form settings of downstream stages (counterfactual search defaults etc.).
    #[serde(default)]
    pub settings: serde_json::Value,
}

impl Manifest {
    /// Writes the checkpoints next to `manifest_path` and then the manifest itself.
    #[allow(clippy::too_many_arguments)]
    pub fn write(
        manifest_path: &Path,
        dataset: &Path,
        experiment: &Experiment,
        target_config: &TrainConfig,
        discriminator_config: &TrainConfig,
        generative_config: &GenerativeConfig,
        settings: serde_json::Value,
    ) -> Result<Manifest> {
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        let stem = manifest_path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment").to_string();
        let name = |part: &str| PathBuf::from(format!("{stem}.{part}.ckpt"));
        let manifest = Manifest {
            version: MANIFEST_VERSION,
            dataset: dataset.to_path_buf(),
            target: name("target"),
            discriminator: name("discriminator"),
            encoder: name("encoder"),
            decoder: name("decoder"),
            attr_dim: experiment.generative.attr_dim(),
            target_config: target_config.clone(),
            discriminator_config: discriminator_config.clone(),
            generative_config: generative_config.clone(),
            target_scores: experiment.target.scores.clone(),
            discriminator_scores: experiment.discriminator.scores.clone(),
            generative_scores: experiment.generative.scores.clone(),
            settings,
        };
        experiment.target.classifier.save(dir.join(&manifest.target))?;
        experiment.discriminator.network.save(dir.join(&manifest.discriminator))?;
        experiment.generative.encoder.save(dir.join(&manifest.encoder))?;
        experiment.generative.decoder.save(dir.join(&manifest.decoder))?;
        std::fs::write(manifest_path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if manifest.version != MANIFEST_VERSION {
            return Err(config_err(format!(
                "manifest version {} is not supported (expected {MANIFEST_VERSION})",
                manifest.version
            )));
        }
        Ok(manifest)
    }

    /// Resolves a manifest-relative path.
    pub fn resolve(manifest_path: &Path, relative: &Path) -> PathBuf {
        if relative.is_absolute() {
            relative.to_path_buf()
        } else {
            manifest_path.parent().unwrap_or(Path::new(".")).join(relative)
        }
    }

    pub fn load_experiment(&self, manifest_path: &Path) -> Result<Experiment> {
        let load = |p: &PathBuf| DenseNetwork::load(Self::resolve(manifest_path, p));
        let mut target = TargetModel::new(load(&self.target)?)?;
        target.scores = self.target_scores.clone();
        let mut discriminator = Discriminator::new(load(&self.discriminator)?)?;
        discriminator.scores = self.discriminator_scores.clone();
        let mut generative = GenerativeModel::new(load(&self.encoder)?, load(&self.decoder)?, self.attr_dim)?;
        generative.scores = self.generative_scores.clone();
        Ok(Experiment { target, discriminator, generative })
    }
}

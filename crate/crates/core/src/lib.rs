//! Counterfactual generation by attribute-informed latent perturbation.
//!
//! A frozen target classifier is explained by searching the latent space of an
//! attribute-conditioned autoencoder: a query is encoded into a raw-feature code `z`
//! and paired with its attribute vector `a`, then `(z, a)` is moved by gradient descent
//! on a prediction loss plus a closeness penalty until the decoded sample receives the
//! desired label.
//!
//! Modules, bottom-up:
//!
//! - [`tensor`], [`nn`]: dense arrays and a small feed-forward network engine.
//! - [`data`]: synthetic attributed datasets and their file container.
//! - [`models`]: target classifier, attribute discriminator, encoder/decoder training.
//! - [`engine`]: counterfactual loss, the latent perturbation search and baselines.
//! - [`metrics`]: flipping ratio, latent perturbation ratio, benchmarks and sweeps.
//! - [`apps`]: attribute-interaction ranking and counterfactual data augmentation.

pub mod apps;
pub mod container;
pub mod data;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;

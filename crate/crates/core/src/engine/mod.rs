//! Counterfactual search. The latent methods optimize `(z, a)` of a frozen generative
//! model against a frozen target; the baselines perturb the input directly. No function
//! here takes a network mutably, and each query is independent, so queries can run
//! concurrently against shared models.

mod config;
mod loss;
mod result;
mod search;

pub use config::AipConfig;
pub use loss::{counterfactual_loss, penalized_gradient, CounterfactualLoss, LossTerms};
pub use result::{CounterfactualResult, Method};
pub use search::{gradient_sign_adversary, input_gradient_descent, run_aip, run_aip_random, run_latent_only};

//! Minimal feed-forward network engine: dense layers, reverse-mode gradients with
//! respect to parameters and inputs, SGD, and the losses used throughout the crate.
//!
//! Forward and backward passes only read the network, so a frozen network can be
//! shared across threads; `sgd_step` needs `&mut` and is therefore single-writer.

mod activation;
mod checkpoint;
pub mod loss;
mod network;

pub use activation::{sigmoid, Activation};
pub use network::{DenseNetwork, ForwardTrace, GradientTape, Layer, LayerGrad};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::activation::Activation;
use crate::error::{config_err, dim_err, Error, Result};
use crate::tensor::Tensor;

/// One affine map followed by an activation. Weights are `[out × in]`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub(crate) weights: Tensor,
    pub(crate) bias: Tensor,
    pub(crate) activation: Activation,
}

impl Layer {
    pub fn new(weights: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        if weights.shape().len() != 2 {
            return Err(dim_err("layer weights must be a matrix"));
        }
        if bias.shape() != [weights.shape()[0]] {
            return Err(dim_err(format!(
                "bias shape {:?} does not match {} output units",
                bias.shape(),
                weights.shape()[0]
            )));
        }
        Ok(Self { weights, bias, activation })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn bias(&self) -> &Tensor {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }
}

/// Sequential stack of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNetwork {
    layers: Vec<Layer>,
}

/// Gradients of one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Result of a reverse pass: parameter gradients (summed over batch rows) and the
/// gradient with respect to the network input (one row per input row).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTape {
    pub param_grads: Vec<LayerGrad>,
    pub input_grad: Tensor,
}

impl GradientTape {
    /// Adds another tape's parameter gradients into this one.
    pub fn accumulate_params(&mut self, other: &GradientTape) -> Result<()> {
        if self.param_grads.len() != other.param_grads.len() {
            return Err(dim_err("cannot accumulate tapes of different networks"));
        }
        for (mine, theirs) in self.param_grads.iter_mut().zip(&other.param_grads) {
            if mine.weights.shape() != theirs.weights.shape() || mine.bias.shape() != theirs.bias.shape() {
                return Err(dim_err("cannot accumulate tapes of different networks"));
            }
            for (a, b) in mine.weights.data_mut().iter_mut().zip(theirs.weights.data()) {
                *a += b;
            }
            for (a, b) in mine.bias.data_mut().iter_mut().zip(theirs.bias.data()) {
                *a += b;
            }
        }
        Ok(())
    }
}

/// Activations recorded during a forward pass, reusable for a reverse pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    input_shape: Vec<usize>,
    rows: usize,
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("trace always holds the input")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

impl DenseNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(config_err("a network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(dim_err(format!(
                    "layer {i} emits {} values but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        let last = layers.len() - 1;
        if layers[..last].iter().any(|l| l.activation == Activation::Softmax) {
            return Err(config_err("softmax is only permitted on the final layer"));
        }
        Ok(Self { layers })
    }

    /// Glorot-uniform weights, zero biases. `dims` lists the width of every layer
    /// boundary, so `dims.len() == activations.len() + 1`.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if dims.len() != activations.len() + 1 {
            return Err(config_err(format!(
                "{} layer widths need {} activations, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                activations.len()
            )));
        }
        if dims.contains(&0) {
            return Err(config_err("layer widths must be positive"));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(io, &act)| {
                let (fan_in, fan_out) = (io[0], io[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let w = (0..fan_in * fan_out).map(|_| rng.random_range(-limit..=limit)).collect();
                Layer::new(Tensor::matrix(fan_out, fan_in, w)?, Tensor::zeros(vec![fan_out]), act)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn output_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let trace = self.forward_trace(input)?;
        self.output_tensor(&trace)
    }

    pub fn forward_trace(&self, input: &Tensor) -> Result<ForwardTrace> {
        if input.row_len() != self.input_dim() || input.shape().len() > 2 {
            return Err(dim_err(format!(
                "network expects rows of {} values, got shape {:?}",
                self.input_dim(),
                input.shape()
            )));
        }
        Ok(self.trace_rows(input.shape().to_vec(), input.rows(), input.data()))
    }

    /// Forward pass over one unbatched row held in a plain slice.
    pub fn forward_slice(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(dim_err(format!("network expects {} inputs, got {}", self.input_dim(), x.len())));
        }
        Ok(self.trace_rows(vec![x.len()], 1, x))
    }

    fn trace_rows(&self, input_shape: Vec<usize>, rows: usize, x: &[f64]) -> ForwardTrace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let (n_in, n_out) = (layer.in_dim(), layer.out_dim());
            let prev = acts.last().unwrap();
            let w = layer.weights.data();
            let b = layer.bias.data();
            let mut out = vec![0.0; rows * n_out];
            for r in 0..rows {
                let xr = &prev[r * n_in..(r + 1) * n_in];
                let yr = &mut out[r * n_out..(r + 1) * n_out];
                for (o, y) in yr.iter_mut().enumerate() {
                    let wo = &w[o * n_in..(o + 1) * n_in];
                    *y = b[o] + wo.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
                }
                layer.activation.apply(yr);
            }
            acts.push(out);
        }
        ForwardTrace { input_shape, rows, acts }
    }

    pub fn output_tensor(&self, trace: &ForwardTrace) -> Result<Tensor> {
        let shape =
            if trace.input_shape.len() == 1 { vec![self.output_dim()] } else { vec![trace.rows, self.output_dim()] };
        Tensor::new(shape, trace.output().to_vec())
    }

    /// Reverse pass. Recomputes the forward activations for `input`.
    pub fn backward(&self, input: &Tensor, grad_at_output: &Tensor) -> Result<GradientTape> {
        let trace = self.forward_trace(input)?;
        if grad_at_output.len() != trace.output().len() {
            return Err(dim_err(format!(
                "output gradient has {} entries, network produced {}",
                grad_at_output.len(),
                trace.output().len()
            )));
        }
        self.backward_trace(&trace, grad_at_output.data(), true)
    }

    /// Reverse pass from a recorded trace, given the gradient at the activated output.
    pub fn backward_trace(
        &self,
        trace: &ForwardTrace,
        grad_at_output: &[f64],
        with_params: bool,
    ) -> Result<GradientTape> {
        let last = self.layers.len() - 1;
        let width = self.layers[last].out_dim();
        if grad_at_output.len() != trace.rows * width {
            return Err(dim_err("output gradient does not match the trace"));
        }
        let out = &trace.acts[last + 1];
        let mut delta = vec![0.0; grad_at_output.len()];
        for r in 0..trace.rows {
            let span = r * width..(r + 1) * width;
            self.layers[last].activation.backprop(&out[span.clone()], &grad_at_output[span.clone()], &mut delta[span]);
        }
        self.backprop_delta(trace, delta, with_params)
    }

    /// Reverse pass seeded with the gradient at the final layer's pre-activations
    /// (for example `p - y` for a softmax head under cross-entropy).
    pub fn backward_trace_logits(
        &self,
        trace: &ForwardTrace,
        grad_at_logits: &[f64],
        with_params: bool,
    ) -> Result<GradientTape> {
        if grad_at_logits.len() != trace.rows * self.output_dim() {
            return Err(dim_err("logit gradient does not match the trace"));
        }
        self.backprop_delta(trace, grad_at_logits.to_vec(), with_params)
    }

    fn backprop_delta(&self, trace: &ForwardTrace, mut delta: Vec<f64>, with_params: bool) -> Result<GradientTape> {
        let rows = trace.rows;
        let mut param_grads = Vec::with_capacity(if with_params { self.layers.len() } else { 0 });
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let (n_in, n_out) = (layer.in_dim(), layer.out_dim());
            let input = &trace.acts[l];
            let w = layer.weights.data();
            if with_params {
                let mut gw = vec![0.0; n_out * n_in];
                let mut gb = vec![0.0; n_out];
                for r in 0..rows {
                    let xr = &input[r * n_in..(r + 1) * n_in];
                    for o in 0..n_out {
                        let d = delta[r * n_out + o];
                        gb[o] += d;
                        if d != 0.0 {
                            for (g, x) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(xr) {
                                *g += d * x;
                            }
                        }
                    }
                }
                param_grads
                    .push(LayerGrad { weights: Tensor::matrix(n_out, n_in, gw)?, bias: Tensor::new(vec![n_out], gb)? });
            }
            let mut grad_in = vec![0.0; rows * n_in];
            for r in 0..rows {
                let gi = &mut grad_in[r * n_in..(r + 1) * n_in];
                for o in 0..n_out {
                    let d = delta[r * n_out + o];
                    if d != 0.0 {
                        for (g, wv) in gi.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                            *g += d * wv;
                        }
                    }
                }
            }
            if l > 0 {
                let prev = &self.layers[l - 1];
                let out = &trace.acts[l];
                let mut next = vec![0.0; rows * n_in];
                for r in 0..rows {
                    let span = r * n_in..(r + 1) * n_in;
                    prev.activation.backprop(&out[span.clone()], &grad_in[span.clone()], &mut next[span]);
                }
                delta = next;
            } else {
                delta = grad_in;
            }
        }
        param_grads.reverse();
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("backward".into()));
        }
        Ok(GradientTape { param_grads, input_grad: Tensor::new(trace.input_shape.clone(), delta)? })
    }

    /// `p <- p - lr * grad(p)` for every parameter.
    pub fn sgd_step(&mut self, tape: &GradientTape, lr: f64) -> Result<()> {
        if !lr.is_finite() || lr < 0.0 {
            return Err(config_err(format!("learning rate must be a non-negative finite number, got {lr}")));
        }
        if tape.param_grads.len() != self.layers.len() {
            return Err(dim_err("gradient tape was not produced for this network"));
        }
        for (layer, g) in self.layers.iter().zip(&tape.param_grads) {
            if g.weights.shape() != layer.weights.shape() || g.bias.shape() != layer.bias.shape() {
                return Err(dim_err("gradient tape shapes do not mirror the network"));
            }
        }
        for (layer, g) in self.layers.iter_mut().zip(&tape.param_grads) {
            for (p, d) in layer.weights.data_mut().iter_mut().zip(g.weights.data()) {
                *p -= lr * d;
            }
            for (p, d) in layer.bias.data_mut().iter_mut().zip(g.bias.data()) {
                *p -= lr * d;
            }
        }
        if self.layers.iter().any(|l| !l.weights.all_finite() || !l.bias.all_finite()) {
            return Err(Error::NonFinite("sgd_step".into()));
        }
        Ok(())
    }

    /// `outer ∘ self`: feeds this network's output into `outer`.
    pub fn then(&self, outer: &DenseNetwork) -> Result<DenseNetwork> {
        if self.output_dim() != outer.input_dim() {
            return Err(dim_err("composed networks do not chain"));
        }
        let mut layers = self.layers.clone();
        layers.extend(outer.layers.iter().cloned());
        DenseNetwork::new(layers)
    }

    /// SHA-256 over layer shapes, activations and the little-endian parameter bytes.
    pub fn param_hash(&self) -> String {
        let mut h = Sha256::new();
        for layer in &self.layers {
            h.update((layer.in_dim() as u64).to_le_bytes());
            h.update((layer.out_dim() as u64).to_le_bytes());
            h.update([layer.activation.tag()]);
            for v in layer.weights.data().iter().chain(layer.bias.data()) {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

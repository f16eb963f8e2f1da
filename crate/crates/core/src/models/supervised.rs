use rand::seq::SliceRandom;

use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::nn::{loss, DenseNetwork};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Head {
    /// Softmax over classes, cross-entropy.
    Softmax,
    /// Independent sigmoids, summed binary cross-entropy.
    Sigmoid,
}

/// Shuffled minibatches of `rows` for one epoch.
pub(crate) fn epoch_batches(rows: &[usize], batch: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut order = rows.to_vec();
    order.shuffle(rng);
    order.chunks(batch).map(<[usize]>::to_vec).collect()
}

/// Turns a non-finite value met during an epoch into a training failure for that epoch.
pub(crate) fn diverged(e: Error, epoch: usize) -> Error {
    match e {
        Error::NonFinite(what) => Error::Training { epoch, message: format!("diverged ({what})") },
        other => other,
    }
}

/// Plain minibatch SGD of `net` on `(inputs[rows], targets[rows])`. Returns the mean
/// training loss of every epoch.
pub(crate) fn fit(
    net: &mut DenseNetwork,
    inputs: &Tensor,
    targets: &Tensor,
    rows: &[usize],
    head: Head,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut total = 0.0;
        let mut run_epoch = || -> Result<()> {
            for batch in epoch_batches(rows, config.batch_size, rng) {
                let x = inputs.select_rows(&batch)?;
                let y = targets.select_rows(&batch)?;
                let trace = net.forward_trace(&x)?;
                let (value, grad) = match head {
                    Head::Softmax => loss::softmax_cross_entropy(trace.output(), y.data(), batch.len()),
                    Head::Sigmoid => loss::sigmoid_binary_cross_entropy(trace.output(), y.data(), batch.len()),
                };
                if !value.is_finite() {
                    return Err(Error::Training { epoch, message: "loss is not finite".into() });
                }
                total += value * batch.len() as f64;
                let tape = net.backward_trace_logits(&trace, &grad, true)?;
                net.sgd_step(&tape, config.lr)?;
            }
            Ok(())
        };
        run_epoch().map_err(|e| diverged(e, epoch))?;
        history.push(total / rows.len() as f64);
    }
    Ok(history)
}

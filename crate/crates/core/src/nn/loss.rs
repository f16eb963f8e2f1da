//! Loss functions with their gradients. Batched inputs are averaged over rows.

use crate::error::{dim_err, Result};
use crate::tensor::Tensor;

/// Probabilities are clamped into `[PROB_FLOOR, 1 - PROB_FLOOR]` before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

fn same_shape(a: &Tensor, b: &Tensor, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(dim_err(format!("{what}: shapes {:?} and {:?} differ", a.shape(), b.shape())));
    }
    Ok(())
}

/// Cross-entropy of predicted class probabilities against one-hot targets.
///
/// With two classes the binary form `-y log p - (1 - y) log(1 - p)` is evaluated on the
/// second column; for more classes the categorical sum is used. Both agree for
/// normalized predictions. The gradient is with respect to `predicted`, evaluated at the
/// clamped probabilities.
pub fn cross_entropy(predicted: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    same_shape(predicted, target, "cross_entropy")?;
    let rows = predicted.rows();
    let classes = predicted.row_len();
    let scale = 1.0 / rows as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; predicted.len()];
    for r in 0..rows {
        let p = predicted.row(r);
        let t = target.row(r);
        let g = &mut grad[r * classes..(r + 1) * classes];
        if classes == 2 {
            let (p1, y) = (clamp_prob(p[1]), t[1]);
            loss -= y * p1.ln() + (1.0 - y) * (1.0 - p1).ln();
            g[1] = scale * (-y / p1 + (1.0 - y) / (1.0 - p1));
        } else {
            for c in 0..classes {
                let pc = clamp_prob(p[c]);
                loss -= t[c] * pc.ln();
                g[c] = -scale * t[c] / pc;
            }
        }
    }
    Ok((loss * scale, Tensor::new(predicted.shape().to_vec(), grad)?))
}

/// Cross-entropy value together with its gradient at the logits of a softmax head,
/// `(p - y) / rows`. Avoids the vanishing gradient of the clamped probability route.
pub fn softmax_cross_entropy(probs: &[f64], target: &[f64], rows: usize) -> (f64, Vec<f64>) {
    let classes = probs.len() / rows;
    let scale = 1.0 / rows as f64;
    let mut loss = 0.0;
    let grad = probs.iter().zip(target).map(|(p, t)| scale * (p - t)).collect();
    for r in 0..rows {
        let p = &probs[r * classes..(r + 1) * classes];
        let t = &target[r * classes..(r + 1) * classes];
        loss -= p.iter().zip(t).map(|(&p, &t)| t * clamp_prob(p).ln()).sum::<f64>();
    }
    (loss * scale, grad)
}

/// Per-attribute binary cross-entropy, summed over attributes and averaged over rows,
/// with its gradient at the logits of a sigmoid head, `(p - a) / rows`.
pub fn sigmoid_binary_cross_entropy(probs: &[f64], target: &[f64], rows: usize) -> (f64, Vec<f64>) {
    let scale = 1.0 / rows as f64;
    let mut loss = 0.0;
    for (&p, &a) in probs.iter().zip(target) {
        let p = clamp_prob(p);
        loss -= a * p.ln() + (1.0 - a) * (1.0 - p).ln();
    }
    let grad = probs.iter().zip(target).map(|(p, a)| scale * (p - a)).collect();
    (loss * scale, grad)
}

/// Euclidean distance `||u - v||_2` and its gradient with respect to `u`.
/// At `u == v` the gradient is defined as zero.
pub fn l2_distance(u: &Tensor, v: &Tensor) -> Result<(f64, Tensor)> {
    same_shape(u, v, "l2_distance")?;
    let (dist, grad) = l2_distance_slices(u.data(), v.data());
    Ok((dist, Tensor::new(u.shape().to_vec(), grad)?))
}

pub(crate) fn l2_distance_slices(u: &[f64], v: &[f64]) -> (f64, Vec<f64>) {
    let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let dist = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    if dist == 0.0 {
        return (0.0, vec![0.0; diff.len()]);
    }
    (dist, diff.into_iter().map(|d| d / dist).collect())
}

use crate::error::{dim_err, Result};
use crate::models::{GenerativeModel, LatentPoint, TargetModel};
use crate::nn::loss::{l2_distance_slices, softmax_cross_entropy};

/// The three loss components at one latent point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossTerms {
    /// `prediction + alpha * perturbation`
    pub total: f64,
    /// Cross-entropy of the decoded sample's prediction against the desired class.
    pub prediction: f64,
    /// `||z - z0|| + ||a - a0||`
    pub perturbation: f64,
}

/// Loss value, its gradients with respect to `z` and `a`, and the by-products of the
/// forward pass.
#[derive(Debug, Clone)]
pub struct CounterfactualLoss {
    pub terms: LossTerms,
    pub grad_z: Vec<f64>,
    pub grad_a: Vec<f64>,
    pub decoded: Vec<f64>,
    pub probabilities: Vec<f64>,
}

/// Gradient of `f(u) + alpha * ||u - anchor||` given `grad_f = ∇f(u)`, together with the
/// distance. Away from the anchor this is the ordinary gradient. At `u == anchor` the
/// minimum-norm subgradient is returned: zero when `||grad_f|| <= alpha`, otherwise
/// `grad_f` shortened by `alpha`.
pub fn penalized_gradient(grad_f: &[f64], u: &[f64], anchor: &[f64], alpha: f64) -> (Vec<f64>, f64) {
    let (dist, unit) = l2_distance_slices(u, anchor);
    if dist > 0.0 {
        let g = grad_f.iter().zip(&unit).map(|(g, b)| g + alpha * b).collect();
        return (g, dist);
    }
    let norm = grad_f.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm <= alpha {
        return (vec![0.0; grad_f.len()], 0.0);
    }
    let shrink = 1.0 - alpha / norm;
    (grad_f.iter().map(|g| g * shrink).collect(), 0.0)
}

/// Evaluates `L_d(F(dec(z, a)), y*) + alpha * (||z - z0|| + ||a - a0||)` and its gradient
/// by chaining the target's and the decoder's reverse passes. See [`penalized_gradient`]
/// for the convention at `z == z0` or `a == a0`.
pub fn counterfactual_loss(
    target: &TargetModel,
    gen: &GenerativeModel,
    p: &LatentPoint,
    p0: &LatentPoint,
    desired: &[f64],
    alpha: f64,
) -> Result<CounterfactualLoss> {
    if p0.z.len() != p.z.len() || p0.a.len() != p.a.len() {
        return Err(dim_err("latent point and anchor differ in shape"));
    }
    if desired.len() != target.classes() {
        return Err(dim_err(format!(
            "desired one-hot has {} entries, target has {} classes",
            desired.len(),
            target.classes()
        )));
    }
    if gen.data_dim() != target.input_dim() {
        return Err(dim_err("decoder output does not feed the target classifier"));
    }
    let dec_trace = gen.decode_trace(p)?;
    let decoded = dec_trace.output().to_vec();
    let tgt_trace = target.classifier.forward_slice(&decoded)?;
    let probabilities = tgt_trace.output().to_vec();
    let (prediction, logit_grad) = softmax_cross_entropy(&probabilities, desired, 1);

    let x_grad = target.classifier.backward_trace_logits(&tgt_trace, &logit_grad, false)?;
    let latent_grad = gen.decoder.backward_trace(&dec_trace, x_grad.input_grad.data(), false)?;
    let g = latent_grad.input_grad.data();
    let k = p.z.len();

    let (grad_z, dz) = penalized_gradient(&g[..k], &p.z, &p0.z, alpha);
    let (grad_a, da) = penalized_gradient(&g[k..], &p.a, &p0.a, alpha);
    let perturbation = dz + da;
    Ok(CounterfactualLoss {
        terms: LossTerms { total: prediction + alpha * perturbation, prediction, perturbation },
        grad_z,
        grad_a,
        decoded,
        probabilities,
    })
}

//! Random tiny model stacks and a central-difference checker shared by the test targets.
#![allow(dead_code)]

use aip_core::engine::counterfactual_loss;
use aip_core::models::{GenerativeModel, LatentPoint, TargetModel};
use aip_core::nn::loss::{cross_entropy, l2_distance};
use aip_core::nn::{Activation, DenseNetwork, Layer};
use aip_core::tensor::one_hot;
use aip_core::Tensor;
use rand::Rng;

pub const H: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const ABS_TOL: f64 = 1e-7;

/// Accepts when either the absolute or the relative error is within tolerance.
pub fn close(analytic: f64, numeric: f64) -> bool {
    let err = (analytic - numeric).abs();
    err <= ABS_TOL || err <= REL_TOL * analytic.abs().max(numeric.abs())
}

pub fn central_difference(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + H;
            let up = f(&probe);
            probe[i] = x[i] - H;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * H)
        })
        .collect()
}

/// Index of the first disagreeing coordinate and both values, if any.
pub fn first_mismatch(analytic: &[f64], numeric: &[f64]) -> Option<(usize, f64, f64)> {
    assert_eq!(analytic.len(), numeric.len());
    analytic.iter().zip(numeric).enumerate().find(|(_, (a, n))| !close(**a, **n)).map(|(i, (a, n))| (i, *a, *n))
}

const HIDDEN_ACTS: [Activation; 4] = [Activation::Tanh, Activation::Sigmoid, Activation::Relu, Activation::Identity];

pub fn random_network<R: Rng>(rng: &mut R, dims: &[usize], last: Activation) -> DenseNetwork {
    let acts: Vec<Activation> = (0..dims.len() - 1)
        .map(|i| if i + 2 == dims.len() { last } else { HIDDEN_ACTS[rng.random_range(0..HIDDEN_ACTS.len())] })
        .collect();
    DenseNetwork::random(dims, &acts, rng).unwrap()
}

/// Smallest absolute pre-activation of any ReLU unit along the forward pass of `x`.
pub fn relu_margin(net: &DenseNetwork, x: &[f64]) -> f64 {
    let mut act = x.to_vec();
    let mut margin = f64::INFINITY;
    for layer in net.layers() {
        let w = layer.weights().data();
        let b = layer.bias().data();
        let mut pre: Vec<f64> = (0..layer.out_dim())
            .map(|o| b[o] + (0..layer.in_dim()).map(|i| w[o * layer.in_dim() + i] * act[i]).sum::<f64>())
            .collect();
        if layer.activation() == Activation::Relu {
            margin = pre.iter().fold(margin, |m, v| m.min(v.abs()));
        }
        layer.activation().apply(&mut pre);
        act = pre;
    }
    margin
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub struct Stack {
    pub target: TargetModel,
    pub gen: GenerativeModel,
    pub d: usize,
    pub k: usize,
    pub t: usize,
    pub classes: usize,
}

pub fn random_stack<R: Rng>(rng: &mut R) -> Stack {
    let d = rng.random_range(2..=6);
    let k = rng.random_range(1..=4);
    let t = rng.random_range(0..=3);
    let classes = rng.random_range(2..=4);
    let h = rng.random_range(2..=5);
    let out = [Activation::Identity, Activation::Sigmoid, Activation::Tanh][rng.random_range(0..3)];
    let encoder = random_network(rng, &[d, h, k], Activation::Tanh);
    let decoder = random_network(rng, &[k + t, h, d], out);
    let target = random_network(rng, &[d, h, classes], Activation::Softmax);
    Stack {
        target: TargetModel::new(target).unwrap(),
        gen: GenerativeModel::new(encoder, decoder, t).unwrap(),
        d,
        k,
        t,
        classes,
    }
}

/// A latent point whose decoder and target passes stay clear of ReLU kinks.
pub fn smooth_point<R: Rng>(rng: &mut R, s: &Stack) -> LatentPoint {
    loop {
        let p = LatentPoint::new(random_vec(rng, s.k, 1.0), random_vec(rng, s.t, 1.0));
        let x = s.gen.decode(&p).unwrap();
        if relu_margin(&s.gen.decoder, &p.concat()) > 1e-3 && relu_margin(&s.target.classifier, &x) > 1e-3 {
            return p;
        }
    }
}

/// Rebuilds `net` with its flattened parameters replaced by `params`.
pub fn with_params(net: &DenseNetwork, params: &[f64]) -> DenseNetwork {
    let mut offset = 0;
    let layers = net
        .layers()
        .iter()
        .map(|l| {
            let nw = l.weights().len();
            let nb = l.bias().len();
            let w = Tensor::new(l.weights().shape().to_vec(), params[offset..offset + nw].to_vec()).unwrap();
            let b = Tensor::vector(params[offset + nw..offset + nw + nb].to_vec());
            offset += nw + nb;
            Layer::new(w, b, l.activation()).unwrap()
        })
        .collect();
    DenseNetwork::new(layers).unwrap()
}

pub fn flat_params(net: &DenseNetwork) -> Vec<f64> {
    net.layers().iter().flat_map(|l| l.weights().data().iter().chain(l.bias().data()).copied()).collect()
}

/// Runs every gradient comparison on one random stack. Returns a description of the
/// first disagreement.
pub fn check_stack<R: Rng>(rng: &mut R) -> Result<usize, String> {
    let s = random_stack(rng);
    let mut checked = 0;

    // Network: input and parameter gradients of a random linear read-out, batch of 2.
    let net = &s.gen.decoder;
    let rows = 2;
    let input = loop {
        let x = random_vec(rng, rows * net.input_dim(), 1.0);
        if x.chunks(net.input_dim()).all(|r| relu_margin(net, r) > 1e-3) {
            break x;
        }
    };
    let weights = random_vec(rng, rows * net.output_dim(), 1.0);
    let in_t = Tensor::matrix(rows, net.input_dim(), input.clone()).unwrap();
    let tape = net.backward(&in_t, &Tensor::matrix(rows, net.output_dim(), weights.clone()).unwrap()).unwrap();
    let readout = |n: &DenseNetwork, x: &[f64]| -> f64 {
        let out = n.forward(&Tensor::matrix(rows, n.input_dim(), x.to_vec()).unwrap()).unwrap();
        out.data().iter().zip(&weights).map(|(o, w)| o * w).sum()
    };
    let numeric = central_difference(&mut |x| readout(net, x), &input);
    if let Some(m) = first_mismatch(tape.input_grad.data(), &numeric) {
        return Err(format!("network input gradient {m:?}"));
    }
    let params = flat_params(net);
    let analytic: Vec<f64> =
        tape.param_grads.iter().flat_map(|g| g.weights.data().iter().chain(g.bias.data()).copied()).collect();
    let numeric = central_difference(&mut |p| readout(&with_params(net, p), &input), &params);
    if let Some(m) = first_mismatch(&analytic, &numeric) {
        return Err(format!("network parameter gradient {m:?}"));
    }
    checked += 2;

    // Cross-entropy with respect to probabilities.
    let probs: Vec<f64> = (0..s.classes).map(|_| rng.random_range(0.05..0.95)).collect();
    let target = one_hot(rng.random_range(0..s.classes), s.classes);
    let (_, g) = cross_entropy(&Tensor::vector(probs.clone()), &target).unwrap();
    let numeric = central_difference(&mut |p| cross_entropy(&Tensor::vector(p.to_vec()), &target).unwrap().0, &probs);
    if let Some(m) = first_mismatch(g.data(), &numeric) {
        return Err(format!("cross-entropy gradient {m:?}"));
    }
    checked += 1;

    // Distance away from coincidence.
    let u = random_vec(rng, s.d, 1.0);
    let v = random_vec(rng, s.d, 1.0);
    let (_, g) = l2_distance(&Tensor::vector(u.clone()), &Tensor::vector(v.clone())).unwrap();
    let vt = Tensor::vector(v);
    let numeric = central_difference(&mut |x| l2_distance(&Tensor::vector(x.to_vec()), &vt).unwrap().0, &u);
    if let Some(m) = first_mismatch(g.data(), &numeric) {
        return Err(format!("l2 distance gradient {m:?}"));
    }
    checked += 1;

    // Counterfactual loss at a point distinct from its anchor in both blocks.
    let p = smooth_point(rng, &s);
    let p0 = LatentPoint::new(
        p.z.iter().map(|v| v + rng.random_range(0.2..0.8)).collect(),
        p.a.iter().map(|v| v - rng.random_range(0.2..0.8)).collect(),
    );
    let desired = one_hot(rng.random_range(0..s.classes), s.classes);
    let alpha = rng.random_range(0.0..2.0);
    let eval = counterfactual_loss(&s.target, &s.gen, &p, &p0, desired.data(), alpha).unwrap();
    let k = s.k;
    let flat = p.concat();
    let numeric = central_difference(
        &mut |v| {
            let q = LatentPoint::new(v[..k].to_vec(), v[k..].to_vec());
            counterfactual_loss(&s.target, &s.gen, &q, &p0, desired.data(), alpha).unwrap().terms.total
        },
        &flat,
    );
    let analytic: Vec<f64> = eval.grad_z.iter().chain(&eval.grad_a).copied().collect();
    if let Some(m) = first_mismatch(&analytic, &numeric) {
        return Err(format!("counterfactual loss gradient {m:?} (k={k}, t={})", s.t));
    }
    checked += 1;
    Ok(checked)
}

/// Identity encoder and decoder over `d` coordinates with no attributes.
pub fn identity_generative(d: usize) -> GenerativeModel {
    let eye = |n: usize| {
        let mut w = vec![0.0; n * n];
        (0..n).for_each(|i| w[i * n + i] = 1.0);
        let layer = Layer::new(Tensor::matrix(n, n, w).unwrap(), Tensor::zeros(vec![n]), Activation::Identity).unwrap();
        DenseNetwork::new(vec![layer]).unwrap()
    };
    GenerativeModel::new(eye(d), eye(d), 0).unwrap()
}

/// Plain gradient descent on `CE(softmax(Wx + b), y) + alpha * ||x - x0||` written out by
/// hand, with the same stopping rule and the minimum-norm subgradient at `x == x0`.
#[allow(clippy::too_many_arguments)]
pub fn reference_descent(
    w: &[f64],
    b: &[f64],
    x0: &[f64],
    desired: usize,
    alpha: f64,
    mu0: f64,
    beta: f64,
    n_max: usize,
) -> Vec<Vec<f64>> {
    let (c, d) = (b.len(), x0.len());
    let mut x = x0.to_vec();
    let mut iterates = vec![x.clone()];
    for n in 0..n_max {
        let logits: Vec<f64> = (0..c).map(|i| b[i] + (0..d).map(|j| w[i * d + j] * x[j]).sum::<f64>()).collect();
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let s: f64 = e.iter().sum();
        let p: Vec<f64> = e.iter().map(|v| v / s).collect();
        let best = (0..c).fold(0, |m, i| if p[i] > p[m] { i } else { m });
        if best == desired {
            break;
        }
        let mut g: Vec<f64> = (0..d)
            .map(|j| (0..c).map(|i| w[i * d + j] * (p[i] - if i == desired { 1.0 } else { 0.0 })).sum())
            .collect();
        let dist = x.iter().zip(x0).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        if dist > 0.0 {
            for j in 0..d {
                g[j] += alpha * (x[j] - x0[j]) / dist;
            }
        } else {
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let shrink = if norm <= alpha { 0.0 } else { 1.0 - alpha / norm };
            g.iter_mut().for_each(|v| *v *= shrink);
        }
        let step = mu0 * beta.powi(n as i32);
        for j in 0..d {
            x[j] -= step * g[j];
        }
        iterates.push(x.clone());
    }
    iterates
}

/// Runs AIP on an identity generative model with a random linear target and compares
/// every iterate with [`reference_descent`]. Returns the number of compared iterations
/// and the largest coordinate difference.
pub fn aip_equivalence(seed: u64, alpha: f64, iterations: usize) -> Result<(usize, f64), String> {
    use aip_core::engine::{run_aip, AipConfig};
    let mut rng = aip_core::rng::seeded(seed);
    let (d, c) = (5, 3);
    let w = random_vec(&mut rng, c * d, 1.0);
    let b = random_vec(&mut rng, c, 0.5);
    let layer =
        Layer::new(Tensor::matrix(c, d, w.clone()).unwrap(), Tensor::vector(b.clone()), Activation::Softmax).unwrap();
    let target = TargetModel::new(DenseNetwork::new(vec![layer]).unwrap()).unwrap();
    let gen = identity_generative(d);
    // Start deep inside class 0 and ask for class 2 with small steps, so the loop runs to
    // its budget.
    let dir: Vec<f64> = (0..d).map(|j| w[j] - w[2 * d + j]).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let x0: Vec<f64> = dir.iter().map(|v| 8.0 * v / norm + rng.random_range(-0.1..0.1)).collect();
    if target.predict(&x0).unwrap() == 2 {
        return Err("query already in the desired class".into());
    }
    let config = AipConfig {
        alpha,
        mu0: 0.05,
        gamma0: 0.05,
        beta: 0.99,
        n_max: iterations,
        desired: Some(2),
        optimize_attributes: true,
        record_trajectory: true,
    };
    let result = run_aip(&target, &gen, &x0, &[], &config).map_err(|e| e.to_string())?;
    let reference = reference_descent(&w, &b, &x0, 2, alpha, config.mu0, config.beta, iterations);
    let trajectory = result.trajectory.ok_or("trajectory missing")?;
    if trajectory.len() != reference.len() {
        return Err(format!("{} iterates from AIP, {} from the reference", trajectory.len(), reference.len()));
    }
    let mut worst: f64 = 0.0;
    for (p, x) in trajectory.iter().zip(&reference) {
        for (u, v) in p.z.iter().zip(x) {
            worst = worst.max((u - v).abs());
        }
    }
    Ok((trajectory.len() - 1, worst))
}

/// A small blob dataset with quickly trained models.
pub fn small_experiment(seed: u64) -> (aip_core::data::AttributedDataset, aip_core::models::Experiment) {
    use aip_core::data::{generate, LabelRule, SynthSpec};
    use aip_core::models::*;
    let spec = SynthSpec {
        n: 800,
        seed,
        label_attributes: vec![0, 1],
        label_rule: LabelRule::Conjunction,
        train_fraction: 0.75,
        dev_fraction: 0.05,
        ..SynthSpec::default()
    };
    let data = generate(&spec).unwrap();
    let tc = TrainConfig { epochs: 40, lr: 5e-3, ..TrainConfig::default() };
    let target = train_target(&data, &tc).unwrap();
    let discriminator = train_discriminator(&data, &TrainConfig { seed: 1, ..tc.clone() }).unwrap();
    let gc = GenerativeConfig { train: TrainConfig { seed: 2, epochs: 40, ..tc }, ..GenerativeConfig::default() };
    let generative = train_generative(&data, &discriminator, &gc).unwrap();
    (data, Experiment { target, discriminator, generative })
}

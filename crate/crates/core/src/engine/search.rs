use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::AipConfig;
use super::loss::{counterfactual_loss, penalized_gradient, LossTerms};
use super::result::{CounterfactualResult, Method};
use crate::error::{config_err, dim_err, Error, Result};
use crate::models::{GenerativeModel, TargetModel};
use crate::nn::loss::softmax_cross_entropy;
use crate::rng::{seeded, Rng as ChaRng};
use crate::tensor::{argmax, one_hot};

fn elapsed_micros(start: Instant) -> u64 {
    // Sub-microsecond runs still count as one tick.
    (start.elapsed().as_micros() as u64).max(1)
}

fn check_query(target: &TargetModel, x0: &[f64]) -> Result<()> {
    if x0.len() != target.input_dim() {
        return Err(dim_err(format!("query has {} values, target expects {}", x0.len(), target.input_dim())));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("query".into()));
    }
    Ok(())
}

enum Direction<'a> {
    Gradient,
    Random(&'a mut ChaRng),
}

fn unit_direction(rng: &mut ChaRng, len: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Shared loop of the latent-space methods.
fn latent_search(
    method: Method,
    target: &TargetModel,
    gen: &GenerativeModel,
    x0: &[f64],
    a0: &[f64],
    config: &AipConfig,
    mut direction: Direction<'_>,
) -> Result<CounterfactualResult> {
    config.validate()?;
    check_query(target, x0)?;
    let classes = target.classes();
    let original_class = target.predict(x0)?;
    let desired_class = config.desired_for(original_class, classes)?;
    let desired = one_hot(desired_class, classes);
    let optimize_a = config.optimize_attributes && method != Method::LatentOnly;

    let clock = Instant::now();
    let start = gen.encode(x0, a0)?;
    let mut p = start.clone();
    let mut trace: Vec<LossTerms> = Vec::new();
    let mut trajectory = config.record_trajectory.then(|| vec![p.clone()]);
    let mut n = 0;
    let mut eval = counterfactual_loss(target, gen, &p, &start, desired.data(), config.alpha)?;
    trace.push(eval.terms);
    // A query that already carries the desired label is returned as its reconstruction.
    if original_class != desired_class {
        while argmax(&eval.probabilities) != desired_class && n < config.n_max {
            let (mu, gamma) = config.step_sizes(n);
            match &mut direction {
                Direction::Gradient => {
                    p.z.iter_mut().zip(&eval.grad_z).for_each(|(v, g)| *v -= mu * g);
                    if optimize_a {
                        p.a.iter_mut().zip(&eval.grad_a).for_each(|(v, g)| *v -= gamma * g);
                    }
                }
                Direction::Random(rng) => {
                    let dz = unit_direction(rng, p.z.len());
                    p.z.iter_mut().zip(dz).for_each(|(v, g)| *v -= mu * g);
                    if optimize_a && !p.a.is_empty() {
                        let da = unit_direction(rng, p.a.len());
                        p.a.iter_mut().zip(da).for_each(|(v, g)| *v -= gamma * g);
                    }
                }
            }
            n += 1;
            if !p.is_finite() {
                return Err(Error::NonFinite(format!("{method} iterate {n}")));
            }
            eval = counterfactual_loss(target, gen, &p, &start, desired.data(), config.alpha)?;
            if !eval.terms.total.is_finite() {
                return Err(Error::NonFinite(format!("{method} loss at iterate {n}")));
            }
            trace.push(eval.terms);
            if let Some(t) = trajectory.as_mut() {
                t.push(p.clone());
            }
        }
    }
    let x_star = eval.decoded;
    let flipped = target.predict(&x_star)? == desired_class;
    let wall_time_micros = elapsed_micros(clock);
    Ok(CounterfactualResult {
        method,
        query: None,
        original_class,
        desired_class,
        x_star,
        start,
        latent: p,
        flipped,
        iterations: n,
        loss_trace: trace,
        wall_time_micros,
        trajectory,
    })
}

/// Attribute-informed perturbation: gradient descent on `(z, a)` with geometrically
/// decaying step sizes, stopping as soon as the decoded sample is classified as the
/// desired class or after `n_max` updates. Networks are only read.
pub fn run_aip(
    target: &TargetModel,
    gen: &GenerativeModel,
    x0: &[f64],
    a0: &[f64],
    config: &AipConfig,
) -> Result<CounterfactualResult> {
    let method = if config.optimize_attributes { Method::Aip } else { Method::LatentOnly };
    latent_search(method, target, gen, x0, a0, config, Direction::Gradient)
}

/// Attribute-free variant: only `z` moves.
pub fn run_latent_only(
    target: &TargetModel,
    gen: &GenerativeModel,
    x0: &[f64],
    a0: &[f64],
    config: &AipConfig,
) -> Result<CounterfactualResult> {
    latent_search(Method::LatentOnly, target, gen, x0, a0, config, Direction::Gradient)
}

/// The AIP loop with every gradient replaced by a random unit direction scaled by the
/// current step size.
pub fn run_aip_random(
    target: &TargetModel,
    gen: &GenerativeModel,
    x0: &[f64],
    a0: &[f64],
    config: &AipConfig,
    seed: u64,
) -> Result<CounterfactualResult> {
    let mut rng = seeded(seed);
    latent_search(Method::AipRandom, target, gen, x0, a0, config, Direction::Random(&mut rng))
}

fn clamp_to(x: &mut [f64], range: Option<(f64, f64)>) {
    if let Some((lo, hi)) = range {
        x.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
    }
}

/// Gradient of the prediction loss with respect to the input, plus the probabilities.
fn input_gradient(target: &TargetModel, x: &[f64], desired: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let trace = target.classifier.forward_slice(x)?;
    let probs = trace.output().to_vec();
    let (value, logit_grad) = softmax_cross_entropy(&probs, desired, 1);
    let tape = target.classifier.backward_trace_logits(&trace, &logit_grad, false)?;
    Ok((value, tape.input_grad.into_data(), probs))
}

/// One signed-gradient step in input space, `clamp(x0 - eps * sign(grad_x L_d))`. The
/// generative model is only used after the timed region, to encode the query and the
/// result for latent comparisons.
#[allow(clippy::too_many_arguments)]
pub fn gradient_sign_adversary(
    target: &TargetModel,
    gen: &GenerativeModel,
    x0: &[f64],
    a0: &[f64],
    epsilon: f64,
    desired: Option<usize>,
    range: Option<(f64, f64)>,
) -> Result<CounterfactualResult> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(config_err(format!("epsilon must be non-negative, got {epsilon}")));
    }
    check_query(target, x0)?;
    let classes = target.classes();
    let clock = Instant::now();
    let original_class = target.predict(x0)?;
    let probe = AipConfig { desired, ..AipConfig::default() };
    let desired_class = probe.desired_for(original_class, classes)?;
    let desired_hot = one_hot(desired_class, classes);
    let (value, grad, _) = input_gradient(target, x0, desired_hot.data())?;
    let mut x_star: Vec<f64> = x0.iter().zip(&grad).map(|(x, g)| x - epsilon * sign(*g)).collect();
    clamp_to(&mut x_star, range);
    let flipped = target.predict(&x_star)? == desired_class;
    let wall_time_micros = elapsed_micros(clock);

    let start = gen.encode(x0, a0)?;
    let latent = gen.encode(&x_star, a0)?;
    let (after, _, _) = input_gradient(target, &x_star, desired_hot.data())?;
    Ok(CounterfactualResult {
        method: Method::GradientSign,
        query: None,
        original_class,
        desired_class,
        x_star,
        start,
        latent,
        flipped,
        iterations: 1,
        loss_trace: vec![
            LossTerms { total: value, prediction: value, perturbation: 0.0 },
            LossTerms { total: after, prediction: after, perturbation: 0.0 },
        ],
        wall_time_micros,
        trajectory: None,
    })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Iterative input-space descent on `L_d + alpha * ||x - x0||` with the decaying step
/// `mu0 * beta^n`, stopping at the first flip or after `n_max` steps.
pub fn input_gradient_descent(
    target: &TargetModel,
    gen: &GenerativeModel,
    x0: &[f64],
    a0: &[f64],
    config: &AipConfig,
    range: Option<(f64, f64)>,
) -> Result<CounterfactualResult> {
    config.validate()?;
    check_query(target, x0)?;
    let classes = target.classes();
    let clock = Instant::now();
    let original_class = target.predict(x0)?;
    let desired_class = config.desired_for(original_class, classes)?;
    let desired_hot = one_hot(desired_class, classes);

    let mut x = x0.to_vec();
    let mut trace = Vec::new();
    let mut n = 0;
    let evaluate = |x: &[f64]| -> Result<(LossTerms, Vec<f64>, Vec<f64>)> {
        let (pred, grad, probs) = input_gradient(target, x, desired_hot.data())?;
        let (grad, dist) = penalized_gradient(&grad, x, x0, config.alpha);
        let total = pred + config.alpha * dist;
        Ok((LossTerms { total, prediction: pred, perturbation: dist }, grad, probs))
    };
    let (mut terms, mut grad, mut probs) = evaluate(&x)?;
    trace.push(terms);
    if original_class != desired_class {
        while argmax(&probs) != desired_class && n < config.n_max {
            let (mu, _) = config.step_sizes(n);
            x.iter_mut().zip(&grad).for_each(|(v, g)| *v -= mu * g);
            clamp_to(&mut x, range);
            n += 1;
            (terms, grad, probs) = evaluate(&x)?;
            if !terms.total.is_finite() {
                return Err(Error::NonFinite(format!("input descent loss at iterate {n}")));
            }
            trace.push(terms);
        }
    }
    let flipped = target.predict(&x)? == desired_class;
    let wall_time_micros = elapsed_micros(clock);
    let start = gen.encode(x0, a0)?;
    let latent = gen.encode(&x, a0)?;
    Ok(CounterfactualResult {
        method: Method::InputDescent,
        query: None,
        original_class,
        desired_class,
        x_star: x,
        start,
        latent,
        flipped,
        iterations: n,
        loss_trace: trace,
        wall_time_micros,
        trajectory: None,
    })
}

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::{AttributeSampling, GenerativeConfig};
use super::discriminator::Discriminator;
use super::supervised::{diverged, epoch_batches};
use crate::data::{AttributedDataset, Split};
use crate::error::{config_err, dim_err, Error, Result};
use crate::nn::{loss, Activation, DenseNetwork, ForwardTrace};
use crate::rng::seeded;
use crate::tensor::Tensor;

/// A point of the attribute-informed latent space: raw-feature code `z` and attribute
/// vector `a`. The attribute part is continuous during optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPoint {
    pub z: Vec<f64>,
    pub a: Vec<f64>,
}

impl LatentPoint {
    pub fn new(z: Vec<f64>, a: Vec<f64>) -> Self {
        Self { z, a }
    }

    /// `z ⊕ a`, the decoder input.
    pub fn concat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.z.len() + self.a.len());
        v.extend_from_slice(&self.z);
        v.extend_from_slice(&self.a);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.z.iter().chain(&self.a).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerativeScores {
    /// Mean `||x - decode(encode(x), a_x)||` on the dev split.
    #[serde(deserialize_with = "super::float_or_nan")]
    pub reconstruction_error: f64,
    /// Mean per-attribute agreement of the discriminator with `a_x` on dev reconstructions.
    #[serde(deserialize_with = "super::float_or_nan")]
    pub attribute_consistency: f64,
    pub loss_history: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Encoder `d -> k` and attribute-conditioned decoder `k + t -> d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeModel {
    pub encoder: DenseNetwork,
    pub decoder: DenseNetwork,
    latent_dim: usize,
    attr_dim: usize,
    pub scores: GenerativeScores,
}

impl GenerativeModel {
    pub fn new(encoder: DenseNetwork, decoder: DenseNetwork, attr_dim: usize) -> Result<Self> {
        let k = encoder.output_dim();
        if decoder.input_dim() != k + attr_dim {
            return Err(dim_err(format!("decoder takes {} inputs but k + t = {}", decoder.input_dim(), k + attr_dim)));
        }
        if decoder.output_dim() != encoder.input_dim() {
            return Err(dim_err("decoder output must match the encoder input dimension"));
        }
        Ok(Self { encoder, decoder, latent_dim: k, attr_dim, scores: GenerativeScores::default() })
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn attr_dim(&self) -> usize {
        self.attr_dim
    }

    pub fn data_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn encode_z(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.encoder.forward_slice(x)?.output().to_vec())
    }

    /// `(encoder(x), a)`.
    pub fn encode(&self, x: &[f64], a: &[f64]) -> Result<LatentPoint> {
        if a.len() != self.attr_dim {
            return Err(dim_err(format!("expected {} attributes, got {}", self.attr_dim, a.len())));
        }
        Ok(LatentPoint::new(self.encode_z(x)?, a.to_vec()))
    }

    pub fn decode(&self, p: &LatentPoint) -> Result<Vec<f64>> {
        Ok(self.decode_trace(p)?.output().to_vec())
    }

    pub(crate) fn decode_trace(&self, p: &LatentPoint) -> Result<ForwardTrace> {
        if p.z.len() != self.latent_dim || p.a.len() != self.attr_dim {
            return Err(dim_err(format!(
                "latent point has dims ({}, {}), model expects ({}, {})",
                p.z.len(),
                p.a.len(),
                self.latent_dim,
                self.attr_dim
            )));
        }
        self.decoder.forward_slice(&p.concat())
    }

    pub fn reconstruct(&self, x: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        self.decode(&self.encode(x, a)?)
    }

    /// Mean reconstruction distance over `rows`.
    pub fn reconstruction_error(&self, data: &AttributedDataset, rows: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &i in rows {
            let xh = self.reconstruct(data.instance(i), data.attribute_row(i))?;
            total += loss::l2_distance_slices(&xh, data.instance(i)).0;
        }
        Ok(total / rows.len().max(1) as f64)
    }

    /// Parameter hashes of encoder and decoder.
    pub fn param_hash(&self) -> String {
        format!("{}:{}", self.encoder.param_hash(), self.decoder.param_hash())
    }
}

/// Mean distance of `rows` to the train-split mean instance: the error of the best
/// constant predictor under this metric's family.
pub fn mean_predictor_error(data: &AttributedDataset, rows: &[usize]) -> f64 {
    let train = data.indices(Split::Train);
    let d = data.dim();
    let mut mean = vec![0.0; d];
    for &i in &train {
        mean.iter_mut().zip(data.instance(i)).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= train.len().max(1) as f64);
    rows.iter().map(|&i| loss::l2_distance_slices(data.instance(i), &mean).0).sum::<f64>() / rows.len().max(1) as f64
}

/// Mean per-attribute agreement between the discriminator on reconstructions and the
/// annotated attributes.
pub fn attribute_consistency(
    gen: &GenerativeModel,
    disc: &Discriminator,
    data: &AttributedDataset,
    rows: &[usize],
) -> Result<f64> {
    let mut hits = 0usize;
    for &i in rows {
        let a = data.attribute_row(i);
        let p = disc.probabilities(&gen.reconstruct(data.instance(i), a)?)?;
        hits += p.iter().zip(a).filter(|(p, a)| (**p > 0.5) == (**a > 0.5)).count();
    }
    Ok(hits as f64 / (rows.len() * gen.attr_dim()).max(1) as f64)
}

/// Fraction of (row, attribute) pairs for which flipping the attribute bit in the
/// decoder input moves the discriminator's prediction for that attribute the same way.
pub fn attribute_toggle_rate(
    gen: &GenerativeModel,
    disc: &Discriminator,
    data: &AttributedDataset,
    rows: &[usize],
) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for &i in rows {
        let base = gen.encode(data.instance(i), data.attribute_row(i))?;
        let p0 = disc.probabilities(&gen.decode(&base)?)?;
        for j in 0..gen.attr_dim() {
            let mut flipped = base.clone();
            flipped.a[j] = 1.0 - flipped.a[j];
            let p1 = disc.probabilities(&gen.decode(&flipped)?)?;
            let delta = p1[j] - p0[j];
            let wanted_up = flipped.a[j] > 0.5;
            if (wanted_up && delta > 0.0) || (!wanted_up && delta < 0.0) {
                hits += 1;
            }
            total += 1;
        }
    }
    Ok(hits as f64 / total.max(1) as f64)
}

/// Trains encoder and decoder against a frozen discriminator by minimizing
/// `E ||x - x_hat|| + lambda * sum_i BCE(D_i(x_tilde), a'_i)`, where
/// `x_hat = dec(enc(x), a_x)` and `x_tilde = dec(enc(x), a')` with `a'` drawn per
/// `config.attribute_sampling`. The discriminator only contributes input gradients.
pub fn train_generative(
    data: &AttributedDataset,
    disc: &Discriminator,
    config: &GenerativeConfig,
) -> Result<GenerativeModel> {
    config.validate()?;
    if disc.attr_dim() != data.attr_dim() || disc.network.input_dim() != data.dim() {
        return Err(dim_err("discriminator does not match the dataset"));
    }
    let train = data.indices(Split::Train);
    if train.is_empty() {
        return Err(config_err("dataset has no training rows"));
    }
    let (d, t, k) = (data.dim(), data.attr_dim(), config.latent_dim);
    let tc = &config.train;
    let mut rng = seeded(tc.seed);
    let out_act = match data.meta.value_range {
        Some((lo, hi)) if lo == 0.0 && hi == 1.0 => Activation::Sigmoid,
        _ => Activation::Identity,
    };
    let mut encoder = DenseNetwork::random(&[d, tc.hidden, k], &[Activation::Tanh, Activation::Identity], &mut rng)?;
    let mut decoder = DenseNetwork::random(&[k + t, tc.hidden, d], &[Activation::Tanh, out_act], &mut rng)?;

    let mut history = Vec::with_capacity(tc.epochs);
    for epoch in 0..tc.epochs {
        let mut total = 0.0;
        let mut run_epoch = || -> Result<()> {
            for batch in epoch_batches(&train, tc.batch_size, &mut rng) {
                let b = batch.len();
                let x = data.instances().select_rows(&batch)?;
                let a = data.attributes().select_rows(&batch)?;
                let enc_trace = encoder.forward_trace(&x)?;
                let z = enc_trace.output();

                // Reconstruction pass, conditioned on each row's own attributes.
                let rec_in = concat_rows(z, k, a.data(), t, b);
                let rec_trace = decoder.forward_trace(&Tensor::matrix(b, k + t, rec_in)?)?;
                let xh = rec_trace.output();
                let mut rec_grad = vec![0.0; b * d];
                let mut rec_loss = 0.0;
                for r in 0..b {
                    let span = r * d..(r + 1) * d;
                    let (dist, g) = loss::l2_distance_slices(&xh[span.clone()], &x.data()[span.clone()]);
                    rec_loss += dist;
                    rec_grad[span].iter_mut().zip(g).for_each(|(o, g)| *o = g / b as f64);
                }
                rec_loss /= b as f64;

                let mut disc_loss = 0.0;
                let mut dec_tape;
                let mut z_grad;
                if config.lambda > 0.0 {
                    let cond: Vec<f64> = match config.attribute_sampling {
                        AttributeSampling::Paired => a.data().to_vec(),
                        AttributeSampling::Marginal => (0..b)
                            .flat_map(|_| data.attribute_row(train[rng.random_range(0..train.len())]).to_vec())
                            .collect(),
                    };
                    let gen_in = concat_rows(z, k, &cond, t, b);
                    let gen_trace = decoder.forward_trace(&Tensor::matrix(b, k + t, gen_in)?)?;
                    let d_trace = disc.network.forward_trace(&Tensor::matrix(b, d, gen_trace.output().to_vec())?)?;
                    let (value, mut g) = loss::sigmoid_binary_cross_entropy(d_trace.output(), &cond, b);
                    disc_loss = value;
                    g.iter_mut().for_each(|v| *v *= config.lambda);
                    let d_tape = disc.network.backward_trace_logits(&d_trace, &g, false)?;
                    let gen_tape = decoder.backward_trace(&gen_trace, d_tape.input_grad.data(), true)?;
                    dec_tape = decoder.backward_trace(&rec_trace, &rec_grad, true)?;
                    dec_tape.accumulate_params(&gen_tape)?;
                    z_grad = latent_part(dec_tape.input_grad.data(), k, t, b);
                    for (zg, extra) in z_grad.iter_mut().zip(latent_part(gen_tape.input_grad.data(), k, t, b)) {
                        *zg += extra;
                    }
                } else {
                    dec_tape = decoder.backward_trace(&rec_trace, &rec_grad, true)?;
                    z_grad = latent_part(dec_tape.input_grad.data(), k, t, b);
                }
                let enc_tape = encoder.backward_trace(&enc_trace, &z_grad, true)?;

                let value = rec_loss + config.lambda * disc_loss;
                if !value.is_finite() {
                    return Err(Error::Training { epoch, message: "generative loss is not finite".into() });
                }
                total += value * b as f64;
                decoder.sgd_step(&dec_tape, tc.lr)?;
                encoder.sgd_step(&enc_tape, tc.lr)?;
            }
            Ok(())
        };
        run_epoch().map_err(|e| diverged(e, epoch))?;
        history.push(total / train.len() as f64);
    }

    let mut model = GenerativeModel::new(encoder, decoder, t)?;
    let mut eval_rows = data.indices(Split::Dev);
    if eval_rows.is_empty() {
        eval_rows = train;
    }
    model.scores = GenerativeScores {
        reconstruction_error: model.reconstruction_error(data, &eval_rows)?,
        attribute_consistency: attribute_consistency(&model, disc, data, &eval_rows)?,
        loss_history: history,
        warnings: Vec::new(),
    };
    if model.scores.attribute_consistency < tc.quality_floor {
        model.scores.warnings.push(format!(
            "attribute consistency {:.4} is below the quality floor {:.2}",
            model.scores.attribute_consistency, tc.quality_floor
        ));
    }
    Ok(model)
}

fn concat_rows(z: &[f64], k: usize, a: &[f64], t: usize, rows: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * (k + t));
    for r in 0..rows {
        out.extend_from_slice(&z[r * k..(r + 1) * k]);
        out.extend_from_slice(&a[r * t..(r + 1) * t]);
    }
    out
}

fn latent_part(grad: &[f64], k: usize, t: usize, rows: usize) -> Vec<f64> {
    (0..rows).flat_map(|r| grad[r * (k + t)..r * (k + t) + k].iter().copied()).collect()
}

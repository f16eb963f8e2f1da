use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::dataset::{AttributedDataset, DatasetMeta, Split};
use super::spec::{Generator, SynthSpec};
use crate::error::{config_err, Result};
use crate::rng::{derive_seed, seeded};
use crate::tensor::Tensor;

/// Random orthonormal basis of R^d (rows), by Gram-Schmidt on Gaussian vectors.
pub(crate) fn orthonormal_basis<R: Rng>(d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    while basis.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
}

/// Number of nuisance directions beyond the attribute directions.
pub(crate) fn style_factors(d: usize, t: usize) -> usize {
    let free = d - t;
    (free / 4).max(1).min(free)
}

pub(crate) fn sample_attributes<R: Rng>(spec: &SynthSpec, rng: &mut R) -> Vec<f64> {
    (0..spec.t).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect()
}

pub(crate) fn assign_splits(spec: &SynthSpec) -> Vec<Split> {
    let (train, dev, _) = spec.split_counts();
    let mut order: Vec<usize> = (0..spec.n).collect();
    order.shuffle(&mut seeded(derive_seed(spec.seed, 3)));
    let mut splits = vec![Split::Test; spec.n];
    for (rank, &i) in order.iter().enumerate() {
        splits[i] = if rank < train {
            Split::Train
        } else if rank < train + dev {
            Split::Dev
        } else {
            Split::Test
        };
    }
    splits
}

pub(crate) fn one_hot_rows(labels: &[usize], classes: usize) -> Vec<f64> {
    labels.iter().flat_map(|&y| (0..classes).map(move |c| if c == y { 1.0 } else { 0.0 })).collect()
}

/// Gaussian blobs in R^d. Attribute `j` moves the mean by `±separation / 2` along its
/// own direction of a random orthonormal basis; a few further basis directions carry
/// nuisance variation of scale `style`, and isotropic noise of scale `noise` covers the
/// rest. Labels are a deterministic function of the designated attributes.
pub fn generate_blobs(spec: &SynthSpec) -> Result<AttributedDataset> {
    if spec.generator != Generator::Blobs {
        return Err(config_err("generate_blobs called with a non-blob spec"));
    }
    spec.validate()?;
    if spec.d <= spec.t {
        return Err(config_err(format!(
            "blobs need d > t to fit {} attribute directions plus nuisance factors",
            spec.t
        )));
    }
    let basis = orthonormal_basis(spec.d, &mut seeded(derive_seed(spec.seed, 1)));
    let n_style = style_factors(spec.d, spec.t);
    let mut rng = seeded(derive_seed(spec.seed, 2));

    let mut xs = Vec::with_capacity(spec.n * spec.d);
    let mut attrs = Vec::with_capacity(spec.n * spec.t);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let a = sample_attributes(spec, &mut rng);
        let mut x = vec![0.0; spec.d];
        for (j, &bit) in a.iter().enumerate() {
            let shift = (bit - 0.5) * spec.separation;
            x.iter_mut().zip(&basis[j]).for_each(|(v, q)| *v += shift * q);
        }
        for s in 0..n_style {
            let f: f64 = rng.sample(StandardNormal);
            x.iter_mut().zip(&basis[spec.t + s]).for_each(|(v, q)| *v += spec.style * f * q);
        }
        for v in x.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *v += spec.noise * e;
        }
        labels.push(spec.label_of(&a));
        xs.extend(x);
        attrs.extend(a);
    }

    let (train, dev, test) = spec.split_counts();
    let n = spec.n as f64;
    AttributedDataset::new(
        Tensor::matrix(spec.n, spec.d, xs)?,
        Tensor::matrix(spec.n, spec.t, attrs)?,
        Tensor::matrix(spec.n, spec.classes, one_hot_rows(&labels, spec.classes))?,
        assign_splits(spec),
        DatasetMeta {
            spec: Some(spec.clone()),
            attribute_names: (0..spec.t).map(|j| format!("factor{j}")).collect(),
            value_range: None,
            split_fractions: (train as f64 / n, dev as f64 / n, test as f64 / n),
        },
    )
}

/// The attribute directions used by `generate_blobs` for this spec (rows of length d).
pub fn blob_attribute_directions(spec: &SynthSpec) -> Vec<Vec<f64>> {
    let mut basis = orthonormal_basis(spec.d, &mut seeded(derive_seed(spec.seed, 1)));
    basis.truncate(spec.t);
    basis
}

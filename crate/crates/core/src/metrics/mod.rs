//! Flipping ratio, latent perturbation ratio and the benchmark harness.

mod benchmark;
mod sweep;

pub use benchmark::{run_benchmark, BenchmarkConfig, BenchmarkReport, BenchmarkRun, MethodSummary};
pub use sweep::{alpha_sweep, sweep_csv, SweepPoint};

use crate::data::{AttributedDataset, Split};
use crate::engine::CounterfactualResult;
use crate::error::{config_err, dim_err, Result};
use crate::models::{Discriminator, GenerativeModel};

/// Fraction of results whose sample flips the decision.
pub fn flipping_ratio(results: &[CounterfactualResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(config_err("flipping ratio of an empty result list"));
    }
    let flipped = results.iter().filter(|r| r.flipped).count();
    Ok(flipped as f64 / results.len() as f64)
}

/// Fraction of latent coordinates with `|z_star[i] - z0[i]| > thresholds[i]`.
pub fn latent_perturbation_ratio(z_star: &[f64], z0: &[f64], thresholds: &[f64]) -> Result<f64> {
    if z_star.len() != z0.len() || z0.len() != thresholds.len() {
        return Err(dim_err(format!(
            "latent perturbation ratio over {}, {} and {} coordinates",
            z_star.len(),
            z0.len(),
            thresholds.len()
        )));
    }
    if z0.is_empty() {
        return Err(dim_err("latent perturbation ratio needs k >= 1"));
    }
    if let Some(e) = thresholds.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(config_err(format!("latent change threshold must be positive, got {e}")));
    }
    let changed = z_star.iter().zip(z0).zip(thresholds).filter(|((s, o), e)| (*s - *o).abs() > **e).count();
    Ok(changed as f64 / z0.len() as f64)
}

/// Same threshold for every coordinate.
pub fn uniform_thresholds(k: usize, epsilon: f64) -> Vec<f64> {
    vec![epsilon; k]
}

/// Per-coordinate thresholds `scale * std(z_i)` over the training split. Coordinates
/// that never vary fall back to `scale`.
pub fn latent_thresholds(gen: &GenerativeModel, data: &AttributedDataset, scale: f64) -> Result<Vec<f64>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(config_err(format!("latent threshold scale must be positive, got {scale}")));
    }
    let rows = data.indices(Split::Train);
    if rows.is_empty() {
        return Err(config_err("latent thresholds need a non-empty training split"));
    }
    let k = gen.latent_dim();
    let mut sum = vec![0.0; k];
    let mut sq = vec![0.0; k];
    for &i in &rows {
        let z = gen.encode_z(data.instance(i))?;
        for c in 0..k {
            sum[c] += z[c];
            sq[c] += z[c] * z[c];
        }
    }
    let n = rows.len() as f64;
    Ok((0..k)
        .map(|c| {
            let mean = sum[c] / n;
            let sd = (sq[c] / n - mean * mean).max(0.0).sqrt();
            if sd > 0.0 {
                scale * sd
            } else {
                scale
            }
        })
        .collect())
}

/// Stand-in for the density constraint on counterfactuals: every attribute the
/// discriminator detects in the reconstruction of the query, and that the search left
/// switched on, is still detected in the generated sample.
pub fn preserves_attributes(
    disc: &Discriminator,
    gen: &GenerativeModel,
    result: &CounterfactualResult,
) -> Result<bool> {
    let recon = gen.decode(&result.start)?;
    let before = disc.probabilities(&recon)?;
    let after = disc.probabilities(&result.x_star)?;
    let kept = result.binarized_attributes();
    Ok(before.iter().zip(&after).zip(&kept).all(|((b, a), k)| *b <= 0.5 || *k == 0.0 || *a > 0.5))
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

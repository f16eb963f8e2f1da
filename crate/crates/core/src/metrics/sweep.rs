use serde::{Deserialize, Serialize};

use super::benchmark::{run_benchmark, BenchmarkConfig};
use crate::data::AttributedDataset;
use crate::engine::{AipConfig, Method};
use crate::error::{config_err, Result};
use crate::models::{GenerativeModel, TargetModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub flipping_ratio: f64,
    pub mean_lpr: f64,
}

/// Runs the AIP benchmark once per `alpha`, everything else held at `base`.
pub fn alpha_sweep(
    data: &AttributedDataset,
    target: &TargetModel,
    gen: &GenerativeModel,
    alphas: &[f64],
    base: &BenchmarkConfig,
) -> Result<Vec<SweepPoint>> {
    if alphas.is_empty() {
        return Err(config_err("alpha sweep needs at least one alpha"));
    }
    alphas
        .iter()
        .map(|&alpha| {
            if !(alpha.is_finite() && alpha >= 0.0) {
                return Err(config_err(format!("alpha must be non-negative, got {alpha}")));
            }
            let config = BenchmarkConfig {
                methods: vec![Method::Aip],
                aip: AipConfig { alpha, ..base.aip.clone() },
                ..base.clone()
            };
            let run = run_benchmark(data, target, gen, &config)?;
            let s = &run.report.methods[0];
            Ok(SweepPoint { alpha, flipping_ratio: s.flipping_ratio, mean_lpr: s.mean_lpr })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("alpha,fr,mean_lpr\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.alpha, p.flipping_ratio, p.mean_lpr));
    }
    out
}

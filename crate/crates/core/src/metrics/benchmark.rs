use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{flipping_ratio, latent_perturbation_ratio, latent_thresholds};
use crate::data::{AttributedDataset, Split};
use crate::engine::{
    gradient_sign_adversary, input_gradient_descent, run_aip, run_aip_random, run_latent_only, AipConfig,
    CounterfactualResult, Method,
};
use crate::error::{config_err, Error, Result};
use crate::models::{GenerativeModel, TargetModel};
use crate::rng::{derive_seed, seeded};

/// What to run and on how many queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub methods: Vec<Method>,
    pub n_queries: usize,
    pub seed: u64,
    pub aip: AipConfig,
    /// Step of the gradient-sign adversary.
    pub epsilon: f64,
    /// Latent change threshold in units of the per-coordinate training std of `z`.
    pub lpr_scale: f64,
    /// Worker threads. Results do not depend on it.
    pub jobs: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            n_queries: 500,
            seed: 0,
            aip: AipConfig::image_defaults(),
            epsilon: 2.0,
            lpr_scale: 1e-3,
            jobs: 1,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        self.aip.validate()?;
        if self.methods.is_empty() {
            return Err(config_err("benchmark needs at least one method"));
        }
        if self.n_queries == 0 {
            return Err(config_err("n_queries must be at least 1"));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(config_err(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if self.jobs == 0 {
            return Err(config_err("jobs must be at least 1"));
        }
        Ok(())
    }
}

/// Aggregates of one method over the query list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub flipping_ratio: f64,
    pub mean_lpr: f64,
    pub mean_micros_per_query: u64,
    pub n_queries: usize,
    pub mean_iterations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub config: BenchmarkConfig,
    /// Dataset rows used as queries, in evaluation order.
    pub queries: Vec<usize>,
    pub lpr_thresholds: Vec<f64>,
    pub methods: Vec<MethodSummary>,
}

/// Report plus every per-query result, grouped by method in report order.
#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub report: BenchmarkReport,
    pub results: Vec<Vec<CounterfactualResult>>,
}

impl BenchmarkReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without wall-clock fields, identical across runs with the same inputs.
    pub fn to_canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(methods) = value.get_mut("methods").and_then(|m| m.as_array_mut()) {
            for m in methods {
                if let Some(obj) = m.as_object_mut() {
                    obj.remove("mean_micros_per_query");
                }
            }
        }
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    /// One row per method.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut out = String::from("method,fr,mean_lpr,n_queries,mean_iterations");
        if with_timing {
            out.push_str(",mean_micros_per_query");
        }
        out.push('\n');
        for m in &self.methods {
            out.push_str(&format!(
                "{},{},{},{},{}",
                m.method, m.flipping_ratio, m.mean_lpr, m.n_queries, m.mean_iterations
            ));
            if with_timing {
                out.push_str(&format!(",{}", m.mean_micros_per_query));
            }
            out.push('\n');
        }
        out
    }
}

/// Test rows whose prediction differs from the desired class, drawn in a seeded order.
fn select_queries(data: &AttributedDataset, target: &TargetModel, config: &BenchmarkConfig) -> Result<Vec<usize>> {
    let mut eligible = Vec::new();
    for i in data.indices(Split::Test) {
        let pred = target.predict(data.instance(i))?;
        if config.aip.desired_for(pred, target.classes())? != pred {
            eligible.push(i);
        }
    }
    if eligible.len() < config.n_queries {
        return Err(config_err(format!(
            "{} queries requested but only {} eligible test rows (short by {})",
            config.n_queries,
            eligible.len(),
            config.n_queries - eligible.len()
        )));
    }
    eligible.shuffle(&mut seeded(derive_seed(config.seed, 0x51)));
    eligible.truncate(config.n_queries);
    eligible.sort_unstable();
    Ok(eligible)
}

fn run_one(
    method: Method,
    data: &AttributedDataset,
    target: &TargetModel,
    gen: &GenerativeModel,
    config: &BenchmarkConfig,
    row: usize,
) -> Result<CounterfactualResult> {
    let x = data.instance(row);
    let a = data.attribute_row(row);
    let range = data.meta.value_range;
    let mut result = match method {
        Method::Aip => run_aip(target, gen, x, a, &AipConfig { optimize_attributes: true, ..config.aip.clone() }),
        Method::LatentOnly => run_latent_only(target, gen, x, a, &config.aip),
        Method::AipRandom => run_aip_random(target, gen, x, a, &config.aip, derive_seed(config.seed, row as u64)),
        Method::GradientSign => gradient_sign_adversary(target, gen, x, a, config.epsilon, config.aip.desired, range),
        Method::InputDescent => input_gradient_descent(target, gen, x, a, &config.aip, range),
    }?;
    result.query = Some(row);
    Ok(result)
}

fn run_method(
    method: Method,
    data: &AttributedDataset,
    target: &TargetModel,
    gen: &GenerativeModel,
    config: &BenchmarkConfig,
    queries: &[usize],
) -> Result<Vec<CounterfactualResult>> {
    if config.jobs <= 1 {
        return queries.iter().map(|&row| run_one(method, data, target, gen, config, row)).collect();
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} worker threads: {e}", config.jobs)))?;
    // `collect` on an indexed parallel iterator keeps query order.
    pool.install(|| queries.par_iter().map(|&row| run_one(method, data, target, gen, config, row)).collect())
}

fn summarize(method: Method, results: &[CounterfactualResult], thresholds: &[f64]) -> Result<MethodSummary> {
    let n = results.len();
    let mut lpr = 0.0;
    let mut micros: u128 = 0;
    let mut iterations = 0usize;
    for r in results {
        lpr += latent_perturbation_ratio(&r.latent.z, &r.start.z, thresholds)?;
        micros += r.wall_time_micros as u128;
        iterations += r.iterations;
    }
    Ok(MethodSummary {
        method,
        flipping_ratio: flipping_ratio(results)?,
        mean_lpr: lpr / n as f64,
        mean_micros_per_query: ((micros + n as u128 / 2) / n as u128).max(1) as u64,
        n_queries: n,
        mean_iterations: iterations as f64 / n as f64,
    })
}

/// Runs every configured method on one shared list of test queries and aggregates
/// flipping ratio, latent perturbation ratio and time per query.
pub fn run_benchmark(
    data: &AttributedDataset,
    target: &TargetModel,
    gen: &GenerativeModel,
    config: &BenchmarkConfig,
) -> Result<BenchmarkRun> {
    config.validate()?;
    let queries = select_queries(data, target, config)?;
    let thresholds = latent_thresholds(gen, data, config.lpr_scale)?;
    let mut methods = Vec::with_capacity(config.methods.len());
    let mut results = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let rs = run_method(method, data, target, gen, config, &queries)?;
        methods.push(summarize(method, &rs, &thresholds)?);
        results.push(rs);
    }
    let report =
        BenchmarkReport { seed: config.seed, config: config.clone(), queries, lpr_thresholds: thresholds, methods };
    Ok(BenchmarkRun { report, results })
}

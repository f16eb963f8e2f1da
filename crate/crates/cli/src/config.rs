//! Command options. Every option struct is both a clap argument group and a section of
//! the TOML config file; flags win over file values, which win over built-in defaults.
//! Search hyperparameters are shared by several subcommands and live in `[search]`.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::error::CliError;

macro_rules! mergeable {
    ($name:ident { $($field:ident),* $(,)? } $($search:ident)?) => {
        impl $name {
            /// Fields set in `self` win; the rest come from `base`.
            pub fn or(self, base: Self) -> Self {
                Self {
                    $($field: self.$field.or(base.$field),)*
                    $($search: self.$search.or(base.$search),)?
                }
            }
        }
    };
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SearchOpts {
    /// Hyperparameter set: image or text.
    #[arg(long)]
    pub hyper: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Desired class (defaults to the other class for binary targets).
    #[arg(long)]
    pub desired: Option<usize>,
    /// Keep the attribute vector fixed and search over z only.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub latent_only: Option<bool>,
}
mergeable!(SearchOpts { hyper, alpha, mu0, gamma0, beta, n_max, desired, latent_only });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenDataOpts {
    /// Output dataset file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Starting point: blobs, glyphs or benchmark.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub style: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub label_attributes: Option<Vec<usize>>,
    /// binary or conjunction.
    #[arg(long)]
    pub label_rule: Option<String>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub dev_fraction: Option<f64>,
}
mergeable!(GenDataOpts {
    out,
    preset,
    seed,
    n,
    d,
    t,
    classes,
    noise,
    separation,
    style,
    label_attributes,
    label_rule,
    train_fraction,
    dev_fraction
});

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainOpts {
    /// Input dataset file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Manifest to write; checkpoints go next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub gen_epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// marginal or paired.
    #[arg(long)]
    pub attribute_sampling: Option<String>,
}
mergeable!(TrainOpts {
    data,
    out,
    seed,
    epochs,
    gen_epochs,
    lr,
    batch_size,
    hidden,
    latent_dim,
    lambda,
    attribute_sampling
});

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExplainOpts {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Dataset row to explain.
    #[arg(long)]
    pub query: Option<usize>,
    /// Text file with the instance values (whitespace or comma separated).
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// aip, aip-random, latent-only, gradient-sign or input-descent.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where the starting attributes come from: dataset or discriminator.
    #[arg(long)]
    pub attributes_from: Option<String>,
    /// Record file (one JSON object per line); stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Graymap with query, reconstruction and counterfactual (raster data only).
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub trajectory: Option<bool>,
    #[command(flatten)]
    #[serde(skip)]
    pub search: SearchOpts,
}
mergeable!(ExplainOpts { manifest, query, instance, method, epsilon, seed, attributes_from, out, grid, trajectory } search);

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct BenchOpts {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub n_queries: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Latent change threshold in units of the training std of each z coordinate.
    #[arg(long)]
    pub lpr_scale: Option<f64>,
    /// CSV file, one row per method; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Full report with configuration snapshot.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Leave wall-clock columns out, for byte-stable output.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_timing: Option<bool>,
    #[command(flatten)]
    #[serde(skip)]
    pub search: SearchOpts,
}
mergeable!(BenchOpts { manifest, methods, n_queries, seed, epsilon, lpr_scale, out, json, no_timing } search);

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepOpts {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub n_queries: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lpr_scale: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub search: SearchOpts,
}
mergeable!(SweepOpts { manifest, alphas, n_queries, seed, lpr_scale, out } search);

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RankOpts {
    /// Record file written by `explain`.
    #[arg(long)]
    pub result: Option<PathBuf>,
    /// Supplies attribute names.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// single (one record) or mean (all flipped records).
    #[arg(long)]
    pub mode: Option<String>,
    /// Record to rank in single mode (0-based line number).
    #[arg(long)]
    pub record: Option<usize>,
    /// Attribute index to leave out, typically the one identical to the label.
    #[arg(long)]
    pub exclude: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
mergeable!(RankOpts { result, manifest, mode, record, exclude, out });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct AugmentOpts {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Number of counterfactual rows to add.
    #[arg(long)]
    pub n_aug: Option<usize>,
    /// Augmented dataset file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for the query order.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_queries: Option<usize>,
    /// Retraining seeds for the comparison table.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Comparison table CSV; stdout if absent.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub search: SearchOpts,
}
mergeable!(AugmentOpts { manifest, n_aug, out, seed, max_queries, seeds, table } search);

/// The config file: one optional section per subcommand, `[search]`, and a global `jobs`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub jobs: Option<usize>,
    pub search: SearchOpts,
    pub gen_data: GenDataOpts,
    pub train: TrainOpts,
    pub explain: ExplainOpts,
    pub bench: BenchOpts,
    pub sweep: SweepOpts,
    pub rank: RankOpts,
    pub augment: AugmentOpts,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::user(format!("--config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| {
            let full = e.to_string();
            let at = full.lines().next().unwrap_or_default();
            CliError::user(format!("--config {}: {at}: {}", path.display(), e.message().trim()))
        })
    }
}

/// A required option, or a diagnostic naming its flag.
pub fn need<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::user(format!("missing required option {flag}")))
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use aip_core::apps::{
    attribute_interaction_ranking, augment_with_counterfactuals, mean_attribute_interaction, ranking_csv,
    retrain_comparison, AugmentConfig,
};
use aip_core::data::{generate, write_pgm_grid, AttributedDataset, Generator, LabelRule, SynthSpec};
use aip_core::engine::{
    gradient_sign_adversary, input_gradient_descent, run_aip, run_aip_random, run_latent_only, AipConfig,
    CounterfactualResult, Method,
};
use aip_core::metrics::{alpha_sweep, run_benchmark, sweep_csv, BenchmarkConfig};
use aip_core::models::{train_experiment, Experiment, GenerativeConfig, Manifest, TrainConfig};
use serde_json::json;

use crate::config::{
    need, AugmentOpts, BenchOpts, ExplainOpts, GenDataOpts, RankOpts, SearchOpts, SweepOpts, TrainOpts,
};
use crate::error::{CliError, Context, Status};

type Outcome = Result<Status, CliError>;

const DEFAULT_ALPHAS: [f64; 5] = [0.0, 0.4, 0.8, 1.5, 3.0];

/// Refuses to write `out` over any of `inputs`.
fn distinct(out: &Path, flag: &str, inputs: &[&Path]) -> Result<(), CliError> {
    let canon = |p: &Path| -> PathBuf {
        if let Ok(c) = fs::canonicalize(p) {
            return c;
        }
        let parent = p.parent().filter(|q| !q.as_os_str().is_empty()).unwrap_or(Path::new("."));
        match (fs::canonicalize(parent), p.file_name()) {
            (Ok(dir), Some(name)) => dir.join(name),
            _ => p.to_path_buf(),
        }
    };
    let target = canon(out);
    for input in inputs {
        if canon(input) == target {
            return Err(CliError::user(format!("{flag} {}: refusing to overwrite an input file", out.display())));
        }
    }
    Ok(())
}

/// Creates the directory an output file goes into.
fn ensure_parent(path: &Path, flag: &str) -> Result<(), CliError> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).context(format_args!("{flag} {}", path.display())),
        None => Ok(()),
    }
}

fn write_text(path: Option<&Path>, flag: &str, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            ensure_parent(p, flag)?;
            fs::write(p, text).context(format_args!("{flag} {}", p.display()))
        }
        None => std::io::stdout().write_all(text.as_bytes()).context("stdout"),
    }
}

fn search_config(o: &SearchOpts) -> Result<AipConfig, CliError> {
    let mut c = match o.hyper.as_deref() {
        None | Some("image") => AipConfig::image_defaults(),
        Some("text") => AipConfig::text_defaults(),
        Some(other) => return Err(CliError::user(format!("--hyper {other}: expected image or text"))),
    };
    if let Some(v) = o.alpha {
        c.alpha = v;
    }
    if let Some(v) = o.mu0 {
        c.mu0 = v;
    }
    if let Some(v) = o.gamma0 {
        c.gamma0 = v;
    }
    if let Some(v) = o.beta {
        c.beta = v;
    }
    if let Some(v) = o.n_max {
        c.n_max = v;
    }
    if o.desired.is_some() {
        c.desired = o.desired;
    }
    if let Some(v) = o.latent_only {
        c.optimize_attributes = !v;
    }
    c.validate().context("search options (--alpha/--mu0/--gamma0/--beta/--n-max)")?;
    Ok(c)
}

struct Loaded {
    manifest: Manifest,
    data_path: PathBuf,
    data: AttributedDataset,
    experiment: Experiment,
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    let what = format_args!("--manifest {}", path.display()).to_string();
    let manifest = Manifest::read(path).context(&what)?;
    let experiment = manifest.load_experiment(path).context(&what)?;
    let data_path = Manifest::resolve(path, &manifest.dataset);
    let data = AttributedDataset::load(&data_path).context(format_args!("dataset {}", data_path.display()))?;
    if data.dim() != experiment.target.input_dim() || data.attr_dim() != experiment.generative.attr_dim() {
        return Err(CliError::user(format!(
            "dataset {}: shape does not match the checkpoints in {}",
            data_path.display(),
            path.display()
        )));
    }
    Ok(Loaded { manifest, data_path, data, experiment })
}

pub fn gen_data(o: GenDataOpts) -> Outcome {
    let out = need(o.out, "--out")?;
    let mut spec = match o.preset.as_deref() {
        None | Some("blobs") => SynthSpec::default(),
        Some("glyphs") => SynthSpec::glyphs(),
        Some("benchmark") => SynthSpec::blob_benchmark(),
        Some(other) => return Err(CliError::user(format!("--preset {other}: expected blobs, glyphs or benchmark"))),
    };
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = o.$f { spec.$f = v; })* };
    }
    set!(seed, n, d, t, classes, noise, separation, style, label_attributes, train_fraction, dev_fraction);
    if let Some(rule) = o.label_rule {
        spec.label_rule = match rule.as_str() {
            "binary" => LabelRule::Binary,
            "conjunction" => LabelRule::Conjunction,
            other => return Err(CliError::user(format!("--label-rule {other}: expected binary or conjunction"))),
        };
    }
    let data = generate(&spec).context("dataset options")?;
    ensure_parent(&out, "--out")?;
    data.save(&out).context(format_args!("--out {}", out.display()))?;
    let kind = match spec.generator {
        Generator::Blobs => "blob",
        Generator::Glyphs => "glyph",
    };
    eprintln!(
        "wrote {} {kind} rows (d={}, t={}, classes={}) to {}",
        data.len(),
        spec.d,
        spec.t,
        spec.classes,
        out.display()
    );
    Ok(Status::Ok)
}

/// Stored relative to the manifest when both share a directory, absolute otherwise.
fn dataset_reference(data: &Path, manifest: &Path) -> PathBuf {
    let data_abs = fs::canonicalize(data).unwrap_or_else(|_| data.to_path_buf());
    let dir = manifest.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    match (fs::canonicalize(dir), data_abs.parent(), data_abs.file_name()) {
        (Ok(d), Some(p), Some(name)) if d == p => PathBuf::from(name),
        _ => data_abs,
    }
}

pub fn train(o: TrainOpts) -> Outcome {
    let data_path = need(o.data, "--data")?;
    let out = need(o.out, "--out")?;
    distinct(&out, "--out", &[&data_path])?;
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment").to_string();
    let dir = out.parent().unwrap_or(Path::new("."));
    for part in ["target", "discriminator", "encoder", "decoder"] {
        distinct(&dir.join(format!("{stem}.{part}.ckpt")), "--out", &[&data_path])?;
    }
    let data = AttributedDataset::load(&data_path).context(format_args!("--data {}", data_path.display()))?;

    let seed = o.seed.unwrap_or(0);
    let mut base = TrainConfig::default();
    if let Some(v) = o.epochs {
        base.epochs = v;
    }
    if let Some(v) = o.lr {
        base.lr = v;
    }
    if let Some(v) = o.batch_size {
        base.batch_size = v;
    }
    if let Some(v) = o.hidden {
        base.hidden = v;
    }
    let target_cfg = TrainConfig { seed, ..base.clone() };
    let disc_cfg = TrainConfig { seed: seed.wrapping_add(1), ..base.clone() };
    let mut gen_cfg = GenerativeConfig::default();
    gen_cfg.train = TrainConfig { seed: seed.wrapping_add(2), epochs: gen_cfg.train.epochs, ..base };
    if let Some(v) = o.gen_epochs {
        gen_cfg.train.epochs = v;
    }
    if let Some(v) = o.latent_dim {
        gen_cfg.latent_dim = v;
    }
    if let Some(v) = o.lambda {
        gen_cfg.lambda = v;
    }
    if let Some(s) = o.attribute_sampling {
        gen_cfg.attribute_sampling = serde_json::from_value(json!(s))
            .map_err(|_| CliError::user(format!("--attribute-sampling {s}: expected marginal or paired")))?;
    }
    target_cfg.validate().context("training options (--epochs/--lr/--batch-size/--hidden)")?;
    gen_cfg.validate().context("generative options (--gen-epochs/--latent-dim/--lambda)")?;

    ensure_parent(&out, "--out")?;
    let experiment = train_experiment(&data, &target_cfg, &disc_cfg, &gen_cfg).context("training")?;
    let settings = json!({
        "seed": seed,
        "dataset_spec": data.meta.spec,
        "aip_image_defaults": AipConfig::image_defaults(),
        "aip_text_defaults": AipConfig::text_defaults(),
        "benchmark_defaults": BenchmarkConfig::default(),
        "sweep_alphas": DEFAULT_ALPHAS,
    });
    Manifest::write(
        &out,
        &dataset_reference(&data_path, &out),
        &experiment,
        &target_cfg,
        &disc_cfg,
        &gen_cfg,
        settings,
    )
    .context(format_args!("--out {}", out.display()))?;
    let e = &experiment;
    eprintln!(
        "target test accuracy {:.4}, discriminator dev accuracy {:.4}, reconstruction error {:.4}",
        e.target.scores.test_accuracy, e.discriminator.scores.dev_accuracy, e.generative.scores.reconstruction_error
    );
    for w in e.target.scores.warnings.iter().chain(&e.discriminator.scores.warnings) {
        eprintln!("warning: {w}");
    }
    eprintln!("wrote {}", out.display());
    Ok(Status::Ok)
}

fn read_instance(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).context(format_args!("--instance {}", path.display()))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::user(format!("--instance {}: '{s}' is not a finite number", path.display())))
        })
        .collect()
}

pub fn explain(o: ExplainOpts) -> Outcome {
    let manifest_path = need(o.manifest, "--manifest")?;
    let Loaded { data_path, data, experiment: e, .. } = load(&manifest_path)?;
    let mut inputs: Vec<&Path> = vec![&manifest_path, &data_path];
    if let Some(p) = &o.instance {
        inputs.push(p);
    }
    for (path, flag) in [(&o.out, "--out"), (&o.grid, "--grid")] {
        if let Some(p) = path {
            distinct(p, flag, &inputs)?;
        }
    }
    let method_name = o.method.as_deref().unwrap_or("aip");
    let method = Method::parse(method_name).ok_or_else(|| {
        CliError::user(format!("--method {method_name}: expected one of {}", Method::ALL.map(|m| m.name()).join(", ")))
    })?;
    let mut config = search_config(&o.search)?;
    config.record_trajectory = o.trajectory.unwrap_or(false);

    let from_disc = match o.attributes_from.as_deref() {
        None => o.instance.is_some(),
        Some("dataset") if o.instance.is_some() => {
            return Err(CliError::user("--attributes-from dataset: an --instance file carries no attributes"))
        }
        Some("dataset") => false,
        Some("discriminator") => true,
        Some(other) => {
            return Err(CliError::user(format!("--attributes-from {other}: expected dataset or discriminator")))
        }
    };
    let (x0, row) = match (o.query, &o.instance) {
        (Some(_), Some(_)) => return Err(CliError::user("--query and --instance are mutually exclusive")),
        (None, None) => return Err(CliError::user("one of --query or --instance is required")),
        (Some(q), None) if q >= data.len() => {
            return Err(CliError::user(format!("--query {q}: dataset has {} rows", data.len())))
        }
        (Some(q), None) => (data.instance(q).to_vec(), Some(q)),
        (None, Some(p)) => {
            let x = read_instance(p)?;
            if x.len() != data.dim() {
                return Err(CliError::user(format!(
                    "--instance {}: {} values, the model expects {}",
                    p.display(),
                    x.len(),
                    data.dim()
                )));
            }
            (x, None)
        }
    };
    let a0 = match row {
        Some(q) if !from_disc => data.attribute_row(q).to_vec(),
        _ => e.discriminator.predict_attributes(&x0).context("discriminator")?,
    };

    let (target, gen) = (&e.target, &e.generative);
    let range = data.meta.value_range;
    let mut result = match method {
        Method::Aip => run_aip(target, gen, &x0, &a0, &config),
        Method::LatentOnly => run_latent_only(target, gen, &x0, &a0, &config),
        Method::AipRandom => run_aip_random(target, gen, &x0, &a0, &config, o.seed.unwrap_or(0)),
        Method::GradientSign => {
            gradient_sign_adversary(target, gen, &x0, &a0, o.epsilon.unwrap_or(2.0), config.desired, range)
        }
        Method::InputDescent => input_gradient_descent(target, gen, &x0, &a0, &config, range),
    }
    .context(format_args!("--method {method}"))?;
    result.query = row;

    write_text(o.out.as_deref(), "--out", &(result.to_json_line() + "\n"))?;
    if let Some(grid) = &o.grid {
        let side =
            data.meta.spec.as_ref().and_then(|s| s.raster_side()).filter(|s| s * s == data.dim()).ok_or_else(|| {
                CliError::user(format!("--grid {}: dataset instances are not square rasters", grid.display()))
            })?;
        ensure_parent(grid, "--grid")?;
        let recon = gen.reconstruct(&x0, &a0).context("reconstruction")?;
        write_pgm_grid(grid, &[x0, recon, result.x_star.clone()], side, 3)
            .context(format_args!("--grid {}", grid.display()))?;
    }
    eprintln!(
        "{}: class {} -> {} ({}), {} iterations",
        result.method,
        result.original_class,
        result.desired_class,
        if result.flipped { "flipped" } else { "not flipped" },
        result.iterations
    );
    Ok(Status::Ok)
}

fn bench_config(
    search: &SearchOpts,
    n_queries: Option<usize>,
    seed: Option<u64>,
    lpr_scale: Option<f64>,
    jobs: usize,
) -> Result<BenchmarkConfig, CliError> {
    let mut c = BenchmarkConfig { aip: search_config(search)?, jobs, ..BenchmarkConfig::default() };
    if let Some(v) = n_queries {
        c.n_queries = v;
    }
    if let Some(v) = seed {
        c.seed = v;
    }
    if let Some(v) = lpr_scale {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::user(format!("--lpr-scale {v}: must be positive")));
        }
        c.lpr_scale = v;
    }
    Ok(c)
}

pub fn bench(o: BenchOpts, jobs: usize) -> Outcome {
    let manifest_path = need(o.manifest, "--manifest")?;
    let Loaded { data_path, data, experiment: e, .. } = load(&manifest_path)?;
    for (path, flag) in [(&o.out, "--out"), (&o.json, "--json")] {
        if let Some(p) = path {
            distinct(p, flag, &[&manifest_path, &data_path])?;
        }
    }
    let mut config = bench_config(&o.search, o.n_queries, o.seed, o.lpr_scale, jobs)?;
    if let Some(v) = o.epsilon {
        config.epsilon = v;
    }
    if let Some(names) = &o.methods {
        config.methods = names
            .iter()
            .map(|n| Method::parse(n.trim()).ok_or_else(|| CliError::user(format!("--methods: unknown method {n}"))))
            .collect::<Result<_, _>>()?;
    }
    config.validate().context("benchmark options")?;
    let run = run_benchmark(&data, &e.target, &e.generative, &config).context("--n-queries / benchmark")?;
    let timing = !o.no_timing.unwrap_or(false);
    write_text(o.out.as_deref(), "--out", &run.report.to_csv(timing))?;
    if let Some(p) = &o.json {
        let text = if timing { run.report.to_json() } else { run.report.to_canonical_json() };
        ensure_parent(p, "--json")?;
        fs::write(p, text).context(format_args!("--json {}", p.display()))?;
    }
    Ok(Status::Ok)
}

pub fn sweep(o: SweepOpts, jobs: usize) -> Outcome {
    let manifest_path = need(o.manifest, "--manifest")?;
    let Loaded { data_path, data, experiment: e, .. } = load(&manifest_path)?;
    if let Some(p) = &o.out {
        distinct(p, "--out", &[&manifest_path, &data_path])?;
    }
    let alphas = o.alphas.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    let config = bench_config(&o.search, o.n_queries, o.seed, o.lpr_scale, jobs)?;
    let points = alpha_sweep(&data, &e.target, &e.generative, &alphas, &config).context("--alphas / sweep")?;
    write_text(o.out.as_deref(), "--out", &sweep_csv(&points))?;
    Ok(Status::Ok)
}

fn read_results(path: &Path) -> Result<Vec<CounterfactualResult>, CliError> {
    let text = fs::read_to_string(path).context(format_args!("--result {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).context(format_args!("--result {} line {}", path.display(), i + 1)))
        .collect()
}

pub fn rank(o: RankOpts) -> Outcome {
    let result_path = need(o.result, "--result")?;
    if let Some(p) = &o.out {
        distinct(p, "--out", &[&result_path])?;
    }
    let results = read_results(&result_path)?;
    let first =
        results.first().ok_or_else(|| CliError::user(format!("--result {}: no records", result_path.display())))?;
    let t = first.latent.a.len();
    let names = match &o.manifest {
        Some(m) => {
            let names = load(m)?.data.attribute_names();
            if names.len() != t {
                return Err(CliError::user(format!(
                    "--manifest {}: {} attributes, records have {t}",
                    m.display(),
                    names.len()
                )));
            }
            names
        }
        None => (0..t).map(|j| format!("attr{j}")).collect(),
    };
    if let Some(j) = o.exclude {
        if j >= t {
            return Err(CliError::user(format!("--exclude {j}: only {t} attributes")));
        }
    }
    let ranking = match o.mode.as_deref() {
        None | Some("single") => {
            let i = o.record.unwrap_or(0);
            let r = results.get(i).ok_or_else(|| {
                CliError::user(format!("--record {i}: {} holds {} records", result_path.display(), results.len()))
            })?;
            attribute_interaction_ranking(r, &r.start.a, &names, o.exclude).context("ranking")?
        }
        Some("mean") => {
            let flipped: Vec<_> = results.into_iter().filter(|r| r.flipped).collect();
            if flipped.is_empty() {
                return Err(CliError::user(format!("--result {}: no flipped records", result_path.display())));
            }
            mean_attribute_interaction(&flipped, &names, o.exclude).context("ranking")?
        }
        Some(other) => return Err(CliError::user(format!("--mode {other}: expected single or mean"))),
    };
    write_text(o.out.as_deref(), "--out", &ranking_csv(&ranking))?;
    Ok(Status::Ok)
}

pub fn augment(o: AugmentOpts) -> Outcome {
    let manifest_path = need(o.manifest, "--manifest")?;
    let n_aug = need(o.n_aug, "--n-aug")?;
    let out = need(o.out, "--out")?;
    let Loaded { manifest, data_path, data, experiment: e } = load(&manifest_path)?;
    distinct(&out, "--out", &[&manifest_path, &data_path])?;
    if let Some(p) = &o.table {
        distinct(p, "--table", &[&manifest_path, &data_path, &out])?;
    }
    let seeds = o.seeds.unwrap_or_else(|| (0..5).collect());
    if seeds.is_empty() {
        return Err(CliError::user("--seeds: at least one seed is required"));
    }
    let config =
        AugmentConfig { aip: search_config(&o.search)?, seed: o.seed.unwrap_or(0), max_queries: o.max_queries };
    let aug = augment_with_counterfactuals(&data, &e.target, &e.generative, n_aug, &config).context("augmentation")?;
    ensure_parent(&out, "--out")?;
    aug.dataset.save(&out).context(format_args!("--out {}", out.display()))?;
    let initial = data.without_synthetic().context("dataset")?;
    let table = retrain_comparison(&initial, &aug.dataset, &manifest.target_config, &seeds).context("retraining")?;
    write_text(o.table.as_deref(), "--table", &table.to_csv())?;
    eprintln!("added {} of {} requested counterfactuals after {} queries", aug.achieved, aug.requested, aug.attempted);
    if let Some(w) = &aug.warning {
        eprintln!("warning: {w}");
    }
    Ok(if aug.is_partial() { Status::Partial } else { Status::Ok })
}

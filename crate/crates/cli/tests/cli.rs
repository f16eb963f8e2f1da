use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use aip_core::data::AttributedDataset;
use aip_core::engine::CounterfactualResult;
use aip_core::models::Manifest;

fn aip(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aip")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = aip(dir, args);
    assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    String::from_utf8(out.stdout).unwrap()
}

/// A trained blob experiment in a fresh directory: `data.aipd` plus `exp.json`.
fn trained() -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_path_buf();
    ok(
        &dir,
        &[
            "gen-data",
            "--out",
            "data.aipd",
            "--n",
            "800",
            "--seed",
            "4",
            "--label-attributes",
            "0,1",
            "--label-rule",
            "conjunction",
        ],
    );
    ok(
        &dir,
        &["train", "--data", "data.aipd", "--out", "exp.json", "--lr", "5e-3", "--epochs", "40", "--gen-epochs", "40"],
    );
    (tmp, dir)
}

#[test]
fn gen_data_twice_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for out in ["a.aipd", "b.aipd"] {
        ok(dir, &["gen-data", "--preset", "glyphs", "--n", "200", "--seed", "9", "--out", out]);
    }
    assert_eq!(fs::read(dir.join("a.aipd")).unwrap(), fs::read(dir.join("b.aipd")).unwrap());
    ok(dir, &["gen-data", "--preset", "glyphs", "--n", "200", "--seed", "10", "--out", "c.aipd"]);
    assert_ne!(fs::read(dir.join("a.aipd")).unwrap(), fs::read(dir.join("c.aipd")).unwrap());
}

#[test]
fn explain_on_an_already_desired_query_takes_no_steps() {
    let (_tmp, dir) = trained();
    let out = ok(&dir, &["explain", "--manifest", "exp.json", "--query", "0"]);
    let first: CounterfactualResult = serde_json::from_str(out.trim()).unwrap();
    let current = first.original_class.to_string();
    ok(&dir, &["explain", "--manifest", "exp.json", "--query", "0", "--desired", &current, "--out", "r.jsonl"]);
    let record: CounterfactualResult =
        serde_json::from_str(fs::read_to_string(dir.join("r.jsonl")).unwrap().trim()).unwrap();
    assert_eq!(record.iterations, 0);
    assert!(record.flipped);
    assert_eq!(record.query, Some(0));
    assert_eq!(record.latent, record.start);
}

#[test]
fn end_to_end_smoke_run() {
    let start = Instant::now();
    let (_tmp, dir) = trained();
    let manifest = Manifest::read(&dir.join("exp.json")).unwrap();
    assert!(manifest.settings.get("aip_image_defaults").is_some());
    assert!(manifest.settings.get("aip_text_defaults").is_some());
    assert_eq!(manifest.dataset, PathBuf::from("data.aipd"));

    let csv = ok(&dir, &["bench", "--manifest", "exp.json", "--n-queries", "20", "--json", "report.json"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,fr,mean_lpr,n_queries,mean_iterations,mean_micros_per_query");
    let methods: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["aip", "aip-random", "latent-only", "gradient-sign", "input-descent"]);
    assert!(dir.join("report.json").exists());

    let sweep = ok(&dir, &["sweep", "--manifest", "exp.json", "--n-queries", "10", "--alphas", "0,3"]);
    assert_eq!(sweep.lines().count(), 3);

    ok(&dir, &["explain", "--manifest", "exp.json", "--query", "1", "--out", "r.jsonl"]);
    let ranking = ok(&dir, &["rank", "--result", "r.jsonl", "--manifest", "exp.json"]);
    assert_eq!(ranking.lines().next(), Some("attribute,score"));
    assert_eq!(ranking.lines().count(), 5);
    assert!(start.elapsed() < Duration::from_secs(120), "{:?}", start.elapsed());
}

#[test]
fn bench_output_does_not_depend_on_jobs() {
    let (_tmp, dir) = trained();
    let run = |jobs: &str| {
        ok(
            &dir,
            &[
                "bench",
                "--manifest",
                "exp.json",
                "--n-queries",
                "12",
                "--no-timing",
                "--jobs",
                jobs,
                "--methods",
                "aip,aip-random,gradient-sign",
            ],
        )
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn user_errors_exit_with_one_and_name_the_culprit() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cases: &[(&[&str], &str)] = &[
        (&["bench", "--manifest", "missing.json"], "missing.json"),
        (&["bench", "--manifset", "x"], "--manifset"),
        (&["gen-data"], "--out"),
        (&["gen-data", "--out", "x.aipd", "--preset", "faces"], "--preset"),
        (&["gen-data", "--out", "x.aipd", "--noise=-1"], "dataset options"),
        (&["--jobs", "0", "gen-data", "--out", "x.aipd"], "--jobs"),
        (&["--config", "nope.toml", "gen-data"], "nope.toml"),
    ];
    for (args, culprit) in cases {
        let out = aip(dir, args);
        let err = stderr(&out);
        assert_eq!(code(&out), 1, "{args:?}: {err}");
        assert_eq!(err.trim().lines().count(), 1, "{args:?}: {err}");
        assert!(err.contains(culprit), "{args:?}: {err}");
    }
}

#[test]
fn inputs_are_never_overwritten() {
    let (_tmp, dir) = trained();
    let before = fs::read(dir.join("data.aipd")).unwrap();
    for args in [
        &["explain", "--manifest", "exp.json", "--query", "0", "--out", "data.aipd"][..],
        &["augment", "--manifest", "exp.json", "--n-aug", "1", "--out", "./data.aipd"],
        &["train", "--data", "data.aipd", "--out", "data.aipd"],
        &["bench", "--manifest", "exp.json", "--json", "exp.json"],
    ] {
        let out = aip(&dir, args);
        assert_eq!(code(&out), 1, "{args:?}");
        assert!(stderr(&out).contains("refusing to overwrite"), "{}", stderr(&out));
    }
    ok(
        &dir,
        &["augment", "--manifest", "exp.json", "--n-aug", "5", "--out", "aug.aipd", "--seeds", "0", "--table", "t.csv"],
    );
    assert_eq!(fs::read(dir.join("data.aipd")).unwrap(), before);
}

#[test]
fn augmentation_shortfall_exits_with_three() {
    let (_tmp, dir) = trained();
    let out = aip(
        &dir,
        &[
            "augment",
            "--manifest",
            "exp.json",
            "--n-aug",
            "10000",
            "--max-queries",
            "20",
            "--out",
            "aug.aipd",
            "--seeds",
            "0",
        ],
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("requested"));
    let aug = AttributedDataset::load(dir.join("aug.aipd")).unwrap();
    let base = AttributedDataset::load(dir.join("data.aipd")).unwrap();
    let added = aug.synthetic().iter().filter(|&&s| s).count();
    assert!(added <= 20);
    assert_eq!(aug.len(), base.len() + added);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.starts_with("training_set,mean_accuracy,std_accuracy,seeds\n"));
}

#[test]
fn numeric_breakdown_is_an_internal_error() {
    let (_tmp, dir) = trained();
    fs::write(dir.join("big.txt"), vec!["1e308"; 32].join(" ")).unwrap();
    let out = aip(&dir, &["explain", "--manifest", "exp.json", "--instance", "big.txt", "--method", "gradient-sign"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("non-finite"));
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("aip.toml"),
        "jobs = 2\n\n[gen-data]\nout = \"cfg.aipd\"\nn = 120\nseed = 3\nlabel-attributes = [1]\n",
    )
    .unwrap();
    ok(dir, &["--config", "aip.toml", "gen-data"]);
    ok(dir, &["--config", "aip.toml", "gen-data", "--n", "50", "--out", "flag.aipd"]);
    let from_file = AttributedDataset::load(dir.join("cfg.aipd")).unwrap();
    let from_flag = AttributedDataset::load(dir.join("flag.aipd")).unwrap();
    assert_eq!(from_file.len(), 120);
    assert_eq!(from_flag.len(), 50);
    assert_eq!(from_flag.meta.spec.as_ref().unwrap().seed, 3);
    assert_eq!(from_flag.meta.spec.as_ref().unwrap().label_attributes, [1]);

    fs::write(dir.join("bad.toml"), "[gen-data]\nnoize = 0.1\n").unwrap();
    let out = aip(dir, &["--config", "bad.toml", "gen-data"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("bad.toml") && stderr(&out).contains("noize"), "{}", stderr(&out));
}

#[test]
fn search_section_applies_to_explain() {
    let (_tmp, dir) = trained();
    fs::write(dir.join("s.toml"), "[search]\nn-max = 3\nalpha = 0.0\n").unwrap();
    let out = ok(&dir, &["--config", "s.toml", "explain", "--manifest", "exp.json", "--query", "2"]);
    let r: CounterfactualResult = serde_json::from_str(out.trim()).unwrap();
    assert!(r.iterations <= 3);
    let out = ok(&dir, &["--config", "s.toml", "explain", "--manifest", "exp.json", "--query", "2", "--n-max", "1"]);
    let r: CounterfactualResult = serde_json::from_str(out.trim()).unwrap();
    assert!(r.iterations <= 1);
}

#[test]
fn glyph_explain_writes_a_graymap() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["gen-data", "--preset", "glyphs", "--n", "300", "--out", "g.aipd"]);
    ok(dir, &["train", "--data", "g.aipd", "--out", "m/g.json", "--epochs", "5", "--gen-epochs", "5"]);
    ok(dir, &["explain", "--manifest", "m/g.json", "--query", "0", "--grid", "out/q.pgm", "--out", "out/q.jsonl"]);
    let pgm = fs::read(dir.join("out/q.pgm")).unwrap();
    // three 12-pixel tiles, one-pixel gutters between them
    assert!(pgm.starts_with(b"P5\n38 12\n255\n"), "{:?}", &pgm[..16]);
    assert_eq!(pgm.len(), b"P5\n38 12\n255\n".len() + 38 * 12);

    ok(dir, &["gen-data", "--n", "100", "--out", "b.aipd"]);
    ok(dir, &["train", "--data", "b.aipd", "--out", "b.json", "--epochs", "1", "--gen-epochs", "1"]);
    let out = aip(dir, &["explain", "--manifest", "b.json", "--query", "0", "--grid", "b.pgm"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("--grid"));
}

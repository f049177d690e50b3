use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn actant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_actant"))
        .args(args)
        .env_remove("ACTANT_OUT_DIR")
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn simulate(dir: &Path) -> String {
    let data = dir.join("data");
    ok(&actant(&[
        "simulate",
        "--out",
        data.to_str().unwrap(),
        "--social-posts",
        "800",
        "--news-posts",
        "800",
        "--seed",
        "2",
    ]));
    data.join("config.json").to_string_lossy().into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_lists_subcommands_and_flags() {
    let out = actant(&["--help"]);
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in [
        "run",
        "ingest",
        "group",
        "cluster",
        "graph",
        "communities",
        "newsnet",
        "coverage",
        "evaluate",
        "simulate",
    ] {
        assert!(text.contains(cmd), "--help misses {cmd}");
    }
    let out = actant(&["run", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in [
        "--config",
        "--out",
        "--force",
        "--min-cooc",
        "--k-override",
        "--kmeans-seed",
        "--distance",
        "--min-edge-weight",
        "--directed-export",
        "--allow-self-loops",
        "--runs",
        "--tau-core",
        "--tau-relax",
        "--community-seed",
        "--width",
        "--shift",
        "--top-tfidf",
        "--top-freq",
        "--baseline-samples",
        "--baseline-size",
        "--metric-seed",
        "--max-lag",
    ] {
        assert!(text.contains(flag), "run --help misses {flag}");
    }
}

#[test]
fn simulate_then_evaluate_reports_recovery() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = simulate(tmp.path());
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();
    for stage in [
        "ingest",
        "group",
        "cluster",
        "graph",
        "communities",
        "evaluate",
    ] {
        ok(&actant(&[
            stage, "--config", &cfg, "--out", out_s, "--runs", "30",
        ]));
    }
    let report = json(&out.join("recovery.json"));
    assert!(report["v_measure"].as_f64().unwrap() >= 0.9, "{report}");
    assert!(out.join("agreement.csv").is_file());
}

#[test]
fn missing_embeddings_exit_with_input_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = simulate(tmp.path());
    let out = tmp.path().join("out");
    let res = actant(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--embeddings",
        "/definitely/missing.tsv",
    ]);
    assert_eq!(res.status.code(), Some(3));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("ingest"), "{err}");
    assert_eq!(
        json(&out.join("manifest.json"))["partial"],
        Value::Bool(true)
    );
}

#[test]
fn invalid_parameters_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = simulate(tmp.path());
    let out = tmp.path().join("out");
    let res = actant(&[
        "group",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--tau-core",
        "3",
    ]);
    assert_eq!(res.status.code(), Some(2));
    let res = actant(&[
        "group",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--k-override",
        "x=2",
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn huge_min_cooc_makes_singleton_groups() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = simulate(tmp.path());
    let out = tmp.path().join("out");
    ok(&actant(&[
        "group",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--min-cooc",
        "999999",
    ]));
    let groups = json(&out.join("groups.json"));
    let seeded: Vec<&Value> = groups
        .as_array()
        .unwrap()
        .iter()
        .filter(|g| g["id"].as_i64().unwrap() >= 0)
        .collect();
    assert_eq!(seeded.len(), 30);
    assert!(seeded
        .iter()
        .all(|g| g["seeds"].as_array().unwrap().len() == 1));
}

#[test]
fn newsnet_writes_one_network_per_window() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = simulate(tmp.path());
    let out = tmp.path().join("out");
    ok(&actant(&[
        "newsnet",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]));
    let count = |suffix: &str| {
        fs::read_dir(out.join("networks"))
            .unwrap()
            .filter(|e| {
                let name = e
                    .as_ref()
                    .unwrap()
                    .file_name()
                    .to_string_lossy()
                    .into_owned();
                name.starts_with("window_") && name.ends_with(suffix)
            })
            .count()
    };
    assert_eq!(count(".graphml"), 101);
    assert_eq!(count(".norm.csv"), 101);
}

#[test]
fn stale_upstream_is_refused_unless_forced() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = simulate(tmp.path());
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();
    let res = actant(&["cluster", "--config", &cfg, "--out", out_s]);
    assert_eq!(res.status.code(), Some(3));
    ok(&actant(&["group", "--config", &cfg, "--out", out_s]));
    ok(&actant(&["cluster", "--config", &cfg, "--out", out_s]));
    let groups = out.join("groups.json");
    let text = fs::read_to_string(&groups).unwrap();
    fs::write(&groups, text.replace("actant", "Actant")).unwrap();
    let res = actant(&["cluster", "--config", &cfg, "--out", out_s]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("stale"));
    ok(&actant(&[
        "cluster", "--config", &cfg, "--out", out_s, "--force",
    ]));
}

#[test]
fn output_dir_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = simulate(tmp.path());
    let env_out = tmp.path().join("env-out");
    let res = Command::new(env!("CARGO_BIN_EXE_actant"))
        .args([
            "group",
            "--config",
            &cfg,
            "--out",
            tmp.path().join("flag-out").to_str().unwrap(),
        ])
        .env("ACTANT_OUT_DIR", &env_out)
        .output()
        .unwrap();
    ok(&res);
    assert!(env_out.join("groups.json").is_file());
    assert!(!tmp.path().join("flag-out").exists());
}

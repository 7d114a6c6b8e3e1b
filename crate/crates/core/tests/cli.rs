mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture;

fn kard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kard"))
        .args(args)
        .output()
        .expect("kard binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn duplicate_doc_id_fails_naming_the_id() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    std::fs::write(
        &corpus,
        "{\"id\": \"alpha\", \"title\": \"\", \"text\": \"x\"}\n{\"id\": \"alpha\", \"title\": \"\", \"text\": \"y\"}\n",
    )
    .unwrap();
    let out = dir.path().join("index.json");
    let o = kard(&["index", "--corpus", s(&corpus), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("alpha"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn missing_input_fails_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let out = dir.path().join("index.json");
    let o = kard(&["index", "--corpus", s(&missing), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.jsonl"), "{}", stderr(&o));
}

#[test]
fn simulate_prints_a_json_report() {
    let o = kard(&[
        "simulate", "--N", "10", "--n", "20", "--d", "16", "--R", "10", "--trials", "5", "--tests",
        "40",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["m"].as_u64().unwrap() >= 1);
    assert_eq!(v["budget_violations"], 0);
}

#[test]
fn simulate_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = kard(&[
        "simulate",
        "--N",
        "10",
        "--n",
        "20",
        "--d",
        "16",
        "--trials",
        "3",
        "--tests",
        "20",
        "--sweep",
        "R=0:20:10",
        "-o",
        s(&out),
        "--quiet",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("R,m,"));
    assert!(dir.path().join("sweep.csv.manifest.json").exists());

    let bad = kard(&["simulate", "--sweep", "Q=1:2:1"]);
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("Q=1:2:1"), "{}", stderr(&bad));
}

#[test]
fn stages_leave_their_inputs_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture("medqa/corpus.jsonl");
    let rationales = fixture("medqa/rationales.jsonl");
    let before = (
        std::fs::read(&corpus).unwrap(),
        std::fs::read(&rationales).unwrap(),
    );
    let index = dir.path().join("index.json");
    let train = dir.path().join("train.jsonl");
    let manifest = dir.path().join("custom-manifest.json");
    assert!(
        kard(&["index", "--corpus", s(&corpus), "-o", s(&index), "--quiet"])
            .status
            .success()
    );
    let o = kard(&[
        "emit-train",
        "--rationales",
        s(&rationales),
        "--corpus",
        s(&corpus),
        "--index",
        s(&index),
        "-o",
        s(&train),
        "--k",
        "2",
        "--manifest-out",
        s(&manifest),
        "--quiet",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(manifest.exists());
    assert!(!dir.path().join("train.jsonl.manifest.json").exists());
    let after = (
        std::fs::read(&corpus).unwrap(),
        std::fs::read(&rationales).unwrap(),
    );
    assert_eq!(before, after);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    let body = serde_json::json!({
        "corpus": fixture("medqa/corpus.jsonl"),
        "rationales": fixture("medqa/rationales.jsonl"),
        "output_dir": dir.path().join("out"),
        "train": {"tau3": 1.0},
    });
    std::fs::write(&config, body.to_string()).unwrap();
    let o = kard(&["run", "--config", s(&config)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tau3"), "{}", stderr(&o));
}

#[test]
fn run_config_executes_the_whole_chain() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    let out = dir.path().join("out");
    let body = serde_json::json!({
        "corpus": fixture("medqa/corpus.jsonl"),
        "rationales": fixture("medqa/rationales.jsonl"),
        "predictions": fixture("medqa/predictions.jsonl"),
        "output_dir": out,
        "seed": 4,
        "emit": {"k": 2},
        "candidates": {"kappa1": 4, "kappa2": 4},
        "train": {"epochs": 5},
    });
    std::fs::write(&config, body.to_string()).unwrap();
    let o = kard(&["run", "--config", s(&config), "--quiet"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in [
        "index.json",
        "train.jsonl",
        "candidates.jsonl",
        "model.json",
        "retrieved.jsonl",
        "metrics.json",
    ] {
        assert!(out.join(name).exists(), "{name}");
        assert!(out.join(format!("{name}.manifest.json")).exists(), "{name}");
    }
    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["accuracy"], 0.5);
}

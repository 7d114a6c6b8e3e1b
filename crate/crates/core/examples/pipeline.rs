// Every stage chained from one config, as `kard run --config` does.
//
// cargo run --release --example pipeline

use std::path::PathBuf;

use kard::pipeline::{run_pipeline, PipelineConfig};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn run_example() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let config: PipelineConfig = serde_json::from_value(serde_json::json!({
        "corpus": fixture("medqa/corpus.jsonl"),
        "rationales": fixture("medqa/rationales.jsonl"),
        "predictions": fixture("medqa/predictions.jsonl"),
        "output_dir": dir.path(),
        "emit": {"k": 2},
        "candidates": {"kappa1": 4, "kappa2": 4},
        "train": {"epochs": 10},
    }))?;
    for m in run_pipeline(&config)? {
        println!("{:<13} {}", m.command, serde_json::to_string(&m.stats)?);
    }
    let metrics = std::fs::read_to_string(dir.path().join("metrics.json"))?;
    println!("\n{metrics}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}

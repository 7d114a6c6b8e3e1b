// Distill rationale-side BM25 scores into a question-side reranker.
//
// The query in each candidate set shares no words with its best document, so
// only a trained model can rank it first.
//
// cargo run --release --example distill_reranker

use std::path::PathBuf;

use kard::corpus::Corpus;
use kard::io::read_jsonl;
use kard::rerank::{
    argmax_agreement, train, CandidateSet, PreparedSet, RerankerModel, TrainConfig,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn run_example() -> anyhow::Result<()> {
    let corpus = Corpus::load_jsonl(fixture("separable/corpus.jsonl"))?;
    let sets: Vec<CandidateSet> = read_jsonl(&fixture("separable/candidates.jsonl"))?;
    let model = RerankerModel::identity(256, 0);
    let prepared = sets
        .into_iter()
        .map(|s| PreparedSet::new(s, &corpus, &model))
        .collect::<Result<Vec<_>, _>>()?;
    println!(
        "{} candidate sets, untrained agreement {:.2}",
        prepared.len(),
        argmax_agreement(&model, &prepared)
    );

    // with tau2 = 100 a logit moves by about lr / tau2^2 per step,
    // so lr has to be large before anything happens
    for lr in [1e-2, 1.0, 100.0] {
        let config = TrainConfig {
            epochs: 50,
            learning_rate: lr,
            ..TrainConfig::default()
        };
        let out = train(&model, &prepared, &config)?;
        println!(
            "lr {lr:>6}: loss {:.6} -> {:.6}, agreement {:.2}",
            out.loss_trace[0],
            out.final_loss,
            argmax_agreement(&out.model, &prepared)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}

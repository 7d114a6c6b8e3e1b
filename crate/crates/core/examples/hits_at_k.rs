// Hits@k of BM25 against rationale-derived silver documents, and
// majority-vote accuracy over sampled generations.
//
// cargo run --example hits_at_k

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use kard::corpus::{Bm25Params, Corpus, PostingsIndex};
use kard::distill::ingest_rationales;
use kard::eval::{accuracy, build_silver, hits_at_k, load_predictions, HitsMode};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn run_example() -> anyhow::Result<()> {
    let corpus = Corpus::load_jsonl(fixture("medqa/corpus.jsonl"))?;
    let index = PostingsIndex::build(corpus.docs(), Bm25Params::default())?;
    let records = ingest_rationales(fixture("medqa/rationales.jsonl"))?;

    let mut retrieved = BTreeMap::new();
    let mut silver = HashMap::new();
    for r in &records {
        silver.insert(r.example_id.clone(), build_silver(&index, r, 0)?);
        let list = index
            .retrieve(&r.question, 10)?
            .into_iter()
            .map(|h| h.doc_id)
            .collect();
        retrieved.insert(r.example_id.clone(), list);
    }
    for mode in [HitsMode::AnyOverlap, HitsMode::AllSilver] {
        let row: Vec<String> = [1, 3, 10]
            .iter()
            .map(|&k| {
                Ok(format!(
                    "@{k} {:.3}",
                    hits_at_k(&retrieved, &silver, k, mode)?.value
                ))
            })
            .collect::<anyhow::Result<_>>()?;
        println!("{mode:?}: {}", row.join("  "));
    }

    let bundles = load_predictions(fixture("medqa/predictions.jsonl"))?;
    println!(
        "self-consistency accuracy over {} questions: {:.2}",
        bundles.len(),
        accuracy(&bundles)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}

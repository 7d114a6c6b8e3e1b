// Build a BM25 index over the bundled medical corpus and query it.
//
// cargo run --example bm25_retrieval

use std::path::PathBuf;

use kard::corpus::{Bm25Params, Corpus, PostingsIndex};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn run_example() -> anyhow::Result<()> {
    let corpus = Corpus::load_jsonl(fixture("medqa/corpus.jsonl"))?;
    let index = PostingsIndex::build(corpus.docs(), Bm25Params::default())?;
    println!(
        "{} docs, {} terms, avg length {:.1}",
        index.doc_count(),
        index.vocabulary_size(),
        index.avg_doc_length()
    );

    for query in [
        "urinary tract infection in pregnancy",
        "hyperthyroidism treatment",
    ] {
        println!("\n{query}");
        for hit in index.retrieve(query, 3)? {
            println!("  {}. {:<20} {:.3}", hit.rank, hit.doc_id, hit.score);
        }
    }

    // k1 = 0 ignores term frequency: only idf and presence matter
    let flat = PostingsIndex::build(corpus.docs(), Bm25Params { k1: 0.0, b: 0.4 })?;
    let top = flat.retrieve("infection", 1)?;
    anyhow::ensure!(!top.is_empty(), "no document mentions infection");
    println!("\nk1=0 top hit for 'infection': {}", top[0].doc_id);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}

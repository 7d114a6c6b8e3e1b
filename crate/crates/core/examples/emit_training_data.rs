// Filter teacher rationales and turn them into knowledge-augmented
// training examples.
//
// cargo run --example emit_training_data

use std::path::PathBuf;

use kard::corpus::{Bm25Params, Corpus, Document, PostingsIndex};
use kard::distill::{
    emit_training_example, filter_rationales, ingest_rationales, retrieve_knowledge, AnswerMatch,
    EmitOptions, Template,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn run_example() -> anyhow::Result<()> {
    let corpus = Corpus::load_jsonl(fixture("medqa/corpus.jsonl"))?;
    let index = PostingsIndex::build(corpus.docs(), Bm25Params::default())?;
    let records = ingest_rationales(fixture("medqa/rationales.jsonl"))?;

    let filtered = filter_rationales(&records, &AnswerMatch);
    for d in &filtered.report {
        if d.dropped > 0 {
            println!(
                "{}: kept {}, dropped {} ({} without an answer)",
                d.id, d.kept, d.dropped, d.unextractable
            );
        }
    }

    let record = &filtered.records[0];
    let knowledge: Vec<Document> = retrieve_knowledge(&index, record, 0, 1)?
        .iter()
        .filter_map(|h| corpus.get(&h.doc_id).cloned())
        .collect();
    let ex = emit_training_example(
        record,
        0,
        &knowledge,
        &Template::medqa(),
        EmitOptions::default(),
    )?;
    println!("\n--- input ({}) ---\n{}", ex.example_id, ex.input_text);
    println!("--- target ---\n{}", ex.target_text);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}

//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use kard::corpus::{Bm25Params, Corpus, Document, PostingsIndex};
use kard::rerank::{CandidateSet, PreparedSet, RerankerModel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(path)
}

/// Word `w{i}`; small indices are drawn far more often (roughly Zipfian).
fn word<R: Rng>(vocab: usize, rng: &mut R) -> String {
    let u: f64 = rng.gen();
    let i = ((vocab as f64).powf(u) - 1.0) as usize;
    format!("w{}", i.min(vocab - 1))
}

pub fn random_text<R: Rng>(len: usize, vocab: usize, rng: &mut R) -> String {
    (0..len)
        .map(|_| word(vocab, rng))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `n` documents of 5..40 words over a `vocab`-word vocabulary. Ids are
/// zero-padded so id order equals ordinal order, which the oracles rely on.
pub fn synthetic_docs(n: usize, vocab: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(5..40);
            Document::new(format!("doc{i:05}"), "", random_text(len, vocab, &mut rng))
        })
        .collect()
}

pub fn synthetic_index(n: usize, vocab: usize, seed: u64) -> (Corpus, PostingsIndex) {
    let docs = synthetic_docs(n, vocab, seed);
    let index = PostingsIndex::build(&docs, Bm25Params::default()).unwrap();
    (Corpus::new(docs).unwrap(), index)
}

/// A random model and candidate set of `size` random texts.
pub fn random_prepared(dim: usize, size: usize, seed: u64) -> (RerankerModel, PreparedSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = RerankerModel::random(dim, seed, 0.7, &mut rng);
    let texts: Vec<String> = (0..size)
        .map(|_| random_text(rng.gen_range(2..12), 30, &mut rng))
        .collect();
    let mut scores: Vec<f64> = (0..size).map(|_| rng.gen_range(0.0..8.0)).collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    let mut ids: Vec<String> = (0..size).map(|i| format!("d{i}")).collect();
    ids.shuffle(&mut rng);
    let set = CandidateSet {
        example_id: format!("q{seed}"),
        j: 0,
        doc_ids: ids,
        teacher_scores: scores,
        question: random_text(rng.gen_range(1..8), 30, &mut rng),
    };
    let prepared = PreparedSet::from_texts(set, &texts, &model);
    (model, prepared)
}

mod common;

use std::io::Write;

use kard::corpus::{rank_order, tokenize, Bm25Params, Corpus, Document, IndexError, PostingsIndex};
use proptest::prelude::*;

use common::{random_text, synthetic_docs};

fn arb_docs() -> impl Strategy<Value = Vec<Document>> {
    prop::collection::vec(prop::collection::vec(0u8..25, 1..20), 1..40).prop_map(|bodies| {
        bodies
            .into_iter()
            .enumerate()
            .map(|(i, words)| {
                let text: Vec<String> = words.iter().map(|w| format!("t{w}")).collect();
                Document::new(format!("d{i:03}"), "", text.join(" "))
            })
            .collect()
    })
}

fn arb_query() -> impl Strategy<Value = String> {
    prop::collection::vec(0u8..30, 0..6).prop_map(|ws| {
        ws.iter()
            .map(|w| format!("t{w}"))
            .collect::<Vec<_>>()
            .join(" ")
    })
}

fn exhaustive(index: &PostingsIndex, query: &str) -> Vec<(String, f64)> {
    let terms = tokenize(query);
    let mut all: Vec<(String, f64)> = (0..index.doc_count())
        .map(|o| {
            (
                index.doc_id(o).unwrap().to_string(),
                index.bm25_score(&terms, o).unwrap(),
            )
        })
        .filter(|(_, s)| *s > 0.0)
        .collect();
    all.sort_by(|a, b| rank_order(a.1, &a.0, b.1, &b.0));
    all
}

proptest! {
    #[test]
    fn retrieve_matches_exhaustive_scoring(docs in arb_docs(), query in arb_query(), k in 1usize..50) {
        let index = PostingsIndex::build(&docs, Bm25Params::default()).unwrap();
        let got: Vec<(String, f64)> = index
            .retrieve(&query, k)
            .unwrap()
            .into_iter()
            .map(|h| (h.doc_id, h.score))
            .collect();
        let want: Vec<(String, f64)> = exhaustive(&index, &query).into_iter().take(k).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn shorter_lists_are_prefixes(docs in arb_docs(), query in arb_query(), k in 1usize..20) {
        let index = PostingsIndex::build(&docs, Bm25Params::default()).unwrap();
        let long = index.retrieve(&query, k + 5).unwrap();
        let short = index.retrieve(&query, k).unwrap();
        prop_assert_eq!(&long[..short.len()], &short[..]);
        for (i, h) in long.iter().enumerate() {
            prop_assert_eq!(h.rank, i + 1);
            prop_assert!(h.score > 0.0);
        }
        for w in long.windows(2) {
            prop_assert!(w[0].score >= w[1].score);
        }
    }

    #[test]
    fn adding_a_matching_term_never_lowers_a_score(
        docs in arb_docs(),
        query in arb_query(),
        k1 in 0.0f64..3.0,
        b in 0.0f64..=1.0,
        pick in any::<prop::sample::Index>(),
    ) {
        let index = PostingsIndex::build(&docs, Bm25Params { k1, b }).unwrap();
        let o = pick.index(docs.len());
        let words: Vec<&str> = docs[o].text.split(' ').collect();
        let extra = words[pick.index(words.len())];
        let before = index.score_text(&query, o).unwrap();
        let after = index.score_text(&format!("{query} {extra}"), o).unwrap();
        prop_assert!(before >= 0.0);
        prop_assert!(after >= before);
    }

    #[test]
    fn serialization_round_trips(docs in arb_docs(), query in arb_query()) {
        let index = PostingsIndex::build(&docs, Bm25Params::default()).unwrap();
        let bytes = index.to_json_bytes();
        let back = PostingsIndex::from_json_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_json_bytes(), bytes);
        prop_assert_eq!(back.retrieve(&query, 10).unwrap(), index.retrieve(&query, 10).unwrap());
    }

    #[test]
    fn tokenizer_is_lowercase_alphanumeric(s in "\\PC{0,40}") {
        for tok in tokenize(&s) {
            prop_assert!(!tok.is_empty());
            prop_assert!(tok.chars().all(char::is_alphanumeric));
            prop_assert_eq!(tok.to_lowercase(), tok.clone());
        }
    }
}

#[test]
fn large_corpus_rebuild_is_byte_identical() {
    let docs = synthetic_docs(500, 300, 1);
    let a = PostingsIndex::build(&docs, Bm25Params::default()).unwrap();
    let b = PostingsIndex::build(&docs, Bm25Params::default()).unwrap();
    assert_eq!(a.to_json_bytes(), b.to_json_bytes());
}

#[test]
fn query_term_order_is_irrelevant() {
    let docs = synthetic_docs(300, 200, 2);
    let index = PostingsIndex::build(&docs, Bm25Params::default()).unwrap();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
    for _ in 0..20 {
        let q = random_text(5, 200, &mut rng);
        let mut words: Vec<&str> = q.split(' ').collect();
        words.reverse();
        assert_eq!(
            index.retrieve(&q, 20).unwrap(),
            index.retrieve(&words.join(" "), 20).unwrap()
        );
    }
}

#[test]
fn jsonl_errors_name_line_and_id() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.jsonl");
    let mut f = std::fs::File::create(&p).unwrap();
    writeln!(f, r#"{{"id": "a", "title": "", "text": "x"}}"#).unwrap();
    writeln!(f, r#"{{"id": "a", "title": "", "text": "y"}}"#).unwrap();
    let err = Corpus::load_jsonl(&p).unwrap_err();
    assert!(
        matches!(err, IndexError::DuplicateDocId(ref id) if id == "a"),
        "{err}"
    );

    std::fs::write(&p, "{\"id\": \"a\", \"text\": \"x\"}\n{not json\n").unwrap();
    let msg = Corpus::load_jsonl(&p).unwrap_err().to_string();
    assert!(msg.contains(":2") || msg.contains("line 2"), "{msg}");
}

#[test]
fn index_file_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let docs = synthetic_docs(50, 40, 4);
    let index = PostingsIndex::build(&docs, Bm25Params::default()).unwrap();
    let p = dir.path().join("index.json");
    kard::io::write_atomic(&p, &index.to_json_bytes()).unwrap();
    let back = PostingsIndex::load(&p).unwrap();
    Corpus::new(docs).unwrap().check_index(&back).unwrap();
}

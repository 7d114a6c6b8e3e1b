mod common;

use kard::answer::extract_answer;
use kard::corpus::{Bm25Params, Corpus, Document, PostingsIndex};
use kard::distill::{
    emit_training_example, filter_rationales, ingest_rationales, parse_training_example,
    retrieve_knowledge, AnswerMatch, DataError, EmitOptions, KeepAll, RationaleRecord, Template,
    VerdictFile,
};
use proptest::prelude::*;

use common::fixture;

const LETTERS: [char; 4] = ['A', 'B', 'C', 'D'];

fn arb_record() -> impl Strategy<Value = RationaleRecord> {
    (
        "[a-z][a-z ,.?]{0,60}",
        0usize..4,
        prop::collection::vec(
            ("[A-Za-z][a-z ,.\n]{0,80}", prop::option::of(0usize..4)),
            1..5,
        ),
    )
        .prop_map(|(stem, gold, rs)| RationaleRecord {
            example_id: "p".into(),
            question: format!("{stem}\n\nA. one B. two C. three D. four"),
            answer: LETTERS[gold],
            rationales: rs
                .into_iter()
                .map(|(body, letter)| match letter {
                    Some(l) => format!("{body} Answer: {}", LETTERS[l]),
                    None => body,
                })
                .collect(),
        })
}

fn arb_passages() -> impl Strategy<Value = Vec<Document>> {
    let text = "[a-z][a-z ,.()]{0,40}(\n[a-z][a-z ,.()]{0,40}){0,2}";
    prop::collection::vec(("[A-Z][a-z ]{0,12}", text), 1..4).prop_map(|ps| {
        ps.into_iter()
            .enumerate()
            .map(|(i, (t, x))| Document::new(format!("k{i}"), t, x))
            .collect()
    })
}

fn no_opts() -> EmitOptions {
    EmitOptions {
        max_knowledge_chars: None,
    }
}

proptest! {
    #[test]
    fn filtering_is_idempotent(records in prop::collection::vec(arb_record(), 0..6)) {
        let once = filter_rationales(&records, &AnswerMatch);
        let twice = filter_rationales(&once.records, &AnswerMatch);
        prop_assert_eq!(&once.records, &twice.records);
        prop_assert!(twice.report.iter().all(|d| d.dropped == 0));
    }

    #[test]
    fn kept_targets_declare_the_gold_answer(record in arb_record(), knowledge in arb_passages()) {
        let kept = filter_rationales(std::slice::from_ref(&record), &AnswerMatch);
        for r in &kept.records {
            for j in 0..r.rationales.len() {
                let ex = emit_training_example(r, j, &knowledge, &Template::medqa(), no_opts()).unwrap();
                prop_assert_eq!(extract_answer(&ex.target_text), Some(r.answer));
            }
        }
    }

    #[test]
    fn emit_then_parse_is_identity(
        record in arb_record(),
        knowledge in arb_passages(),
        strategy in any::<bool>(),
        free in any::<bool>(),
        cap in prop::option::of(5usize..80),
    ) {
        let mut template = if strategy { Template::strategyqa() } else { Template::medqa() };
        if free {
            template = template.knowledge_free();
        }
        let opts = EmitOptions { max_knowledge_chars: cap };
        let want: Vec<String> = if free {
            Vec::new()
        } else {
            knowledge
                .iter()
                .map(|d| match cap {
                    Some(c) => d.passage().chars().take(c).collect(),
                    None => d.passage(),
                })
                .collect()
        };
        let splits = |p: &String| p.contains("\n\n") || p.starts_with('\n') || p.ends_with('\n');
        for j in 0..record.rationales.len() {
            let ex = match emit_training_example(&record, j, &knowledge, &template, opts) {
                Ok(ex) => ex,
                // truncation can leave a passage ending on a newline
                Err(DataError::AmbiguousLayout { .. }) => {
                    prop_assert!(want.len() > 1 && want.iter().any(splits));
                    continue;
                }
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            let parsed = parse_training_example(&ex, &template).unwrap();
            prop_assert_eq!(&parsed.question, &record.question);
            prop_assert_eq!(parsed.rationale.as_str(), record.rationale_body(j).unwrap());
            prop_assert_eq!(parsed.answer, record.answer);
            prop_assert_eq!(&parsed.knowledge, &want);
        }
    }
}

fn medqa() -> (Corpus, PostingsIndex, Vec<RationaleRecord>) {
    let corpus = Corpus::load_jsonl(fixture("medqa/corpus.jsonl")).unwrap();
    let index = PostingsIndex::build(corpus.docs(), Bm25Params::default()).unwrap();
    let records = ingest_rationales(fixture("medqa/rationales.jsonl")).unwrap();
    (corpus, index, records)
}

#[test]
fn knowledge_retrieval_is_deterministic_and_rationale_driven() {
    let (_, index, records) = medqa();
    for r in &records {
        for j in 0..r.rationales.len() {
            let a = retrieve_knowledge(&index, r, j, 3).unwrap();
            let b = retrieve_knowledge(&index, r, j, 3).unwrap();
            assert_eq!(a, b);
        }
    }
    let graves = records
        .iter()
        .find(|r| r.example_id == "medqa-graves")
        .unwrap();
    let top = retrieve_knowledge(&index, graves, 0, 1).unwrap();
    assert_eq!(top[0].doc_id, "methimazole");
}

#[test]
fn fixture_filtering_report() {
    let (_, _, records) = medqa();
    let kept = filter_rationales(&records, &AnswerMatch);
    let by_id = |id: &str| kept.report.iter().find(|d| d.id == id).unwrap().clone();
    let uti = by_id("medqa-uti");
    assert_eq!((uti.kept, uti.dropped, uti.unextractable), (2, 1, 0));
    let gout = by_id("medqa-gout");
    assert_eq!((gout.kept, gout.dropped, gout.unextractable), (1, 1, 1));
    assert_eq!(kept.dropped_records(), 0);
    let all = filter_rationales(&records, &KeepAll);
    assert_eq!(all.records, records);
}

#[test]
fn verdict_file_filter() {
    let (_, _, records) = medqa();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("verdicts.jsonl");
    std::fs::write(
        &p,
        "{\"id\": \"medqa-uti\", \"j\": 2, \"keep\": true}\n{\"id\": \"medqa-mi\", \"j\": 0, \"keep\": false}\n",
    )
    .unwrap();
    let f = VerdictFile::load(&p).unwrap();
    let kept = filter_rationales(&records, &f);
    assert_eq!(kept.records.len(), 1);
    assert_eq!(kept.records[0].example_id, "medqa-uti");
    assert!(kept.records[0].rationales[0].ends_with("Answer: B"));
}

#[test]
fn strategyqa_and_custom_headers() {
    let (corpus, index, records) = medqa();
    let r = &records[0];
    let kn: Vec<Document> = retrieve_knowledge(&index, r, 0, 2)
        .unwrap()
        .iter()
        .map(|h| corpus.get(&h.doc_id).unwrap().clone())
        .collect();
    let ex = emit_training_example(r, 0, &kn, &Template::strategyqa(), no_opts()).unwrap();
    assert!(ex
        .input_text
        .starts_with("The following are multiple-choice questions. Generate a step-by-step explanation for each question:\n\nQuestion: "));
    assert_eq!(ex.knowledge_doc_ids.len(), 2);

    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("header.txt");
    std::fs::write(&h, "Explain, then answer:\n").unwrap();
    let t = Template::from_id(&format!("custom:{}", h.display())).unwrap();
    assert_eq!(t.header, "Explain, then answer:");
    let ex = emit_training_example(r, 0, &kn, &t, no_opts()).unwrap();
    assert!(ex
        .input_text
        .starts_with("Explain, then answer:\n\nQuestion: "));

    let free =
        emit_training_example(r, 0, &[], &Template::medqa().knowledge_free(), no_opts()).unwrap();
    assert!(!free.input_text.contains("Knowledge:"));
    assert!(free.input_text.ends_with("\n\nExplanation:"));
}

#[test]
fn missing_knowledge_and_rationale_are_errors() {
    let (_, _, records) = medqa();
    let r = &records[0];
    assert!(matches!(
        emit_training_example(r, 0, &[], &Template::medqa(), no_opts()),
        Err(DataError::NoKnowledge(id)) if id == "medqa-uti"
    ));
    assert!(matches!(
        emit_training_example(r, 9, &[], &Template::medqa().knowledge_free(), no_opts()),
        Err(DataError::NoSuchRationale { j: 9, .. })
    ));
}

#[test]
fn malformed_rationale_file_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.jsonl");
    std::fs::write(
        &p,
        "{\"id\": \"a\", \"question\": \"Q A. x B. y\", \"answer\": \"A\", \"rationales\": []}\n{\"id\": 3}\n",
    )
    .unwrap();
    let msg = ingest_rationales(&p).unwrap_err().to_string();
    assert!(msg.contains(":2") || msg.contains("line 2"), "{msg}");
}

#[test]
fn passages_that_would_not_split_back_are_rejected() {
    let (_, _, records) = medqa();
    let r = &records[0];
    for bad in ["tail\n", "mid\n\ndle"] {
        let kn = vec![Document::new("a", "", bad), Document::new("b", "", "fine")];
        assert!(matches!(
            emit_training_example(r, 0, &kn, &Template::medqa(), no_opts()),
            Err(DataError::AmbiguousLayout { .. })
        ));
    }
    // a single passage is never split, so blank lines are fine there
    let one = vec![Document::new("a", "", "x\n\ny\n")];
    let ex = emit_training_example(r, 0, &one, &Template::medqa(), no_opts()).unwrap();
    let parsed = parse_training_example(&ex, &Template::medqa()).unwrap();
    assert_eq!(parsed.knowledge, vec!["x\n\ny\n".to_string()]);
}

//! Rationale ingestion, filtering and knowledge-augmented training-example emission.
//!
//! An emitted input looks like
//!
//! ```text
//! <header>
//!
//! Question: <question with lettered options>
//!
//! Knowledge: <Title . passage>
//!
//! Explanation:
//! ```
//!
//! and its target is `<rationale body>\n\nAnswer: <letter>`. The knowledge-free
//! template (plain reasoning distillation) drops the `Knowledge:` block.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::answer::{extract_answer, option_letters, split_rationale};
use crate::corpus::{Document, IndexError, PostingsIndex, ScoredDoc};
use crate::io::{read_jsonl, JsonlError};

pub const MEDICAL_HEADER: &str = "The following are multiple-choice questions about medical knowledge. Generate a step-by-step explanation for each question:";
pub const GENERAL_HEADER: &str =
    "The following are multiple-choice questions. Generate a step-by-step explanation for each question:";

const QUESTION_TAG: &str = "\n\nQuestion: ";
const KNOWLEDGE_TAG: &str = "\n\nKnowledge: ";
const EXPLANATION_TAG: &str = "\n\nExplanation:";
const ANSWER_TAG: &str = "\n\nAnswer: ";
const PASSAGE_SEP: &str = "\n\n";

#[derive(thiserror::Error, Debug)]
pub enum DataError {
    #[error(transparent)]
    Parse(#[from] JsonlError),
    #[error("example {0}: answer is not one of the question's option letters")]
    AnswerNotInOptions(String),
    #[error("example {example_id} has no rationale {j}")]
    NoSuchRationale { example_id: String, j: usize },
    #[error("example {0}: knowledge-augmented template requires at least one passage")]
    NoKnowledge(String),
    #[error("example {example_id}: {reason}; emitted text would not re-parse")]
    AmbiguousLayout { example_id: String, reason: String },
    #[error("training example does not match the template: {0}")]
    Layout(String),
    #[error("cannot read template header {path}: {source}")]
    Template {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown template id {0:?} (expected medqa, strategyqa or custom:<file>)")]
    UnknownTemplate(String),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// A training question with its gold option letter and teacher rationales.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationaleRecord {
    pub example_id: String,
    pub question: String,
    pub answer: char,
    pub rationales: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    id: String,
    question: String,
    answer: String,
    #[serde(default)]
    rationales: Vec<String>,
}

impl RationaleRecord {
    fn from_raw(raw: RawRecord) -> Result<Self, DataError> {
        let mut chars = raw.answer.trim().chars();
        let answer = match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii_alphabetic() => c.to_ascii_uppercase(),
            _ => return Err(DataError::AnswerNotInOptions(raw.id)),
        };
        if !option_letters(&raw.question).contains(&answer) {
            return Err(DataError::AnswerNotInOptions(raw.id));
        }
        Ok(Self {
            example_id: raw.id,
            question: raw.question,
            answer,
            rationales: raw.rationales,
        })
    }

    /// Rationale `j` without its trailing answer declaration.
    pub fn rationale_body(&self, j: usize) -> Result<&str, DataError> {
        self.rationales
            .get(j)
            .map(|r| split_rationale(r).0)
            .ok_or_else(|| DataError::NoSuchRationale {
                example_id: self.example_id.clone(),
                j,
            })
    }
}

impl Serialize for RationaleRecord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawRecord {
            id: self.example_id.clone(),
            question: self.question.clone(),
            answer: self.answer.to_string(),
            rationales: self.rationales.clone(),
        }
        .serialize(s)
    }
}

/// Reads `{"id", "question", "answer", "rationales"}` JSONL and validates answers.
pub fn ingest_rationales(path: impl AsRef<Path>) -> Result<Vec<RationaleRecord>, DataError> {
    let raw: Vec<RawRecord> = read_jsonl(path.as_ref())?;
    raw.into_iter().map(RationaleRecord::from_raw).collect()
}

/// Decides whether rationale `j` of `record` is kept for training.
pub trait RationaleFilter {
    fn keep(&self, record: &RationaleRecord, j: usize, rationale: &str) -> bool;
}

/// Keeps rationales whose declared answer matches the gold answer.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnswerMatch;

impl RationaleFilter for AnswerMatch {
    fn keep(&self, record: &RationaleRecord, _j: usize, rationale: &str) -> bool {
        extract_answer(rationale) == Some(record.answer)
    }
}

/// Keeps everything.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeepAll;

impl RationaleFilter for KeepAll {
    fn keep(&self, _: &RationaleRecord, _: usize, _: &str) -> bool {
        true
    }
}

/// Verdicts produced by an external filter, keyed by `(id, j)`.
///
/// Rationales without a verdict are dropped.
#[derive(Debug, Clone, Default)]
pub struct VerdictFile {
    verdicts: HashMap<(String, usize), bool>,
}

#[derive(Debug, Deserialize)]
struct Verdict {
    id: String,
    j: usize,
    keep: bool,
}

impl VerdictFile {
    /// Reads `{"id", "j", "keep"}` JSONL.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let rows: Vec<Verdict> = read_jsonl(path.as_ref())?;
        Ok(Self {
            verdicts: rows.into_iter().map(|v| ((v.id, v.j), v.keep)).collect(),
        })
    }
}

impl RationaleFilter for VerdictFile {
    fn keep(&self, record: &RationaleRecord, j: usize, _: &str) -> bool {
        self.verdicts
            .get(&(record.example_id.clone(), j))
            .copied()
            .unwrap_or(false)
    }
}

/// Per-record outcome of [`filter_rationales`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DropCount {
    pub id: String,
    pub kept: usize,
    pub dropped: usize,
    /// Dropped rationales with no extractable answer declaration.
    pub unextractable: usize,
}

#[derive(Debug, Clone)]
pub struct Filtered {
    pub records: Vec<RationaleRecord>,
    pub report: Vec<DropCount>,
}

impl Filtered {
    pub fn dropped_records(&self) -> usize {
        self.report.iter().filter(|d| d.kept == 0).count()
    }
}

/// Keeps only the rationales accepted by `filter`; records left with none are dropped.
pub fn filter_rationales(records: &[RationaleRecord], filter: &dyn RationaleFilter) -> Filtered {
    let mut kept_records = Vec::new();
    let mut report = Vec::with_capacity(records.len());
    for record in records {
        let mut kept = Vec::new();
        let mut unextractable = 0;
        for (j, r) in record.rationales.iter().enumerate() {
            if filter.keep(record, j, r) {
                kept.push(r.clone());
            } else if extract_answer(r).is_none() {
                unextractable += 1;
            }
        }
        report.push(DropCount {
            id: record.example_id.clone(),
            kept: kept.len(),
            dropped: record.rationales.len() - kept.len(),
            unextractable,
        });
        if !kept.is_empty() {
            kept_records.push(RationaleRecord {
                rationales: kept,
                ..record.clone()
            });
        }
    }
    Filtered {
        records: kept_records,
        report,
    }
}

/// Top-`k` passages retrieved with rationale `j` (not the question) as the query.
pub fn retrieve_knowledge(
    index: &PostingsIndex,
    record: &RationaleRecord,
    j: usize,
    k: usize,
) -> Result<Vec<ScoredDoc>, DataError> {
    let query = record.rationale_body(j)?;
    Ok(index.retrieve(query, k)?)
}

/// Input layout: a header line and whether the `Knowledge:` block is present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub header: String,
    pub with_knowledge: bool,
}

impl Template {
    pub fn medqa() -> Self {
        Self {
            header: MEDICAL_HEADER.to_string(),
            with_knowledge: true,
        }
    }

    pub fn strategyqa() -> Self {
        Self {
            header: GENERAL_HEADER.to_string(),
            with_knowledge: true,
        }
    }

    pub fn custom(header: impl Into<String>) -> Self {
        Self {
            header: header.into(),
            with_knowledge: true,
        }
    }

    /// Same header, no knowledge block.
    pub fn knowledge_free(mut self) -> Self {
        self.with_knowledge = false;
        self
    }

    /// Parses `medqa`, `strategyqa` or `custom:<path>` (header read from the file).
    pub fn from_id(id: &str) -> Result<Self, DataError> {
        match id {
            "medqa" => Ok(Self::medqa()),
            "strategyqa" => Ok(Self::strategyqa()),
            other => match other.strip_prefix("custom:") {
                Some(path) => {
                    let header =
                        std::fs::read_to_string(path).map_err(|source| DataError::Template {
                            path: path.to_string(),
                            source,
                        })?;
                    Ok(Self::custom(header.trim_end_matches(['\n', '\r'])))
                }
                None => Err(DataError::UnknownTemplate(other.to_string())),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    #[serde(rename = "id")]
    pub example_id: String,
    #[serde(rename = "j")]
    pub rationale_index: usize,
    #[serde(rename = "input")]
    pub input_text: String,
    #[serde(rename = "target")]
    pub target_text: String,
    #[serde(rename = "doc_ids")]
    pub knowledge_doc_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EmitOptions {
    /// Truncate each passage to this many characters.
    pub max_knowledge_chars: Option<usize>,
}

/// Builds the training input/target for rationale `j` of `record`.
pub fn emit_training_example(
    record: &RationaleRecord,
    j: usize,
    knowledge: &[Document],
    template: &Template,
    opts: EmitOptions,
) -> Result<TrainingExample, DataError> {
    let body = record.rationale_body(j)?;
    let ambiguous = |reason: &str| DataError::AmbiguousLayout {
        example_id: record.example_id.clone(),
        reason: reason.to_string(),
    };

    let mut input = String::new();
    input.push_str(&template.header);
    input.push_str(QUESTION_TAG);
    input.push_str(&record.question);

    let mut doc_ids = Vec::new();
    if template.with_knowledge {
        if knowledge.is_empty() {
            return Err(DataError::NoKnowledge(record.example_id.clone()));
        }
        if record.question.contains(KNOWLEDGE_TAG) {
            return Err(ambiguous("question contains a knowledge delimiter"));
        }
        let passages: Vec<String> = knowledge
            .iter()
            .map(|d| truncate_chars(d.passage(), opts.max_knowledge_chars))
            .collect();
        let splits =
            |p: &String| p.contains(PASSAGE_SEP) || p.starts_with('\n') || p.ends_with('\n');
        if passages.len() > 1 && passages.iter().any(splits) {
            return Err(ambiguous("a passage contains or borders on a blank line"));
        }
        input.push_str(KNOWLEDGE_TAG);
        input.push_str(&passages.join(PASSAGE_SEP));
        doc_ids = knowledge.iter().map(|d| d.doc_id.clone()).collect();
    }
    input.push_str(EXPLANATION_TAG);

    let target = format!("{body}{ANSWER_TAG}{}", record.answer);
    Ok(TrainingExample {
        example_id: record.example_id.clone(),
        rationale_index: j,
        input_text: input,
        target_text: target,
        knowledge_doc_ids: doc_ids,
    })
}

fn truncate_chars(text: String, max: Option<usize>) -> String {
    match max {
        Some(max) => text.chars().take(max).collect(),
        None => text,
    }
}

/// Fields recovered from an emitted [`TrainingExample`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedExample {
    pub question: String,
    pub knowledge: Vec<String>,
    pub rationale: String,
    pub answer: char,
}

/// Inverse of [`emit_training_example`].
pub fn parse_training_example(
    example: &TrainingExample,
    template: &Template,
) -> Result<ParsedExample, DataError> {
    let layout = |m: &str| DataError::Layout(m.to_string());
    let rest = example
        .input_text
        .strip_prefix(template.header.as_str())
        .and_then(|s| s.strip_prefix(QUESTION_TAG))
        .ok_or_else(|| layout("missing header or Question:"))?;
    let rest = rest
        .strip_suffix(EXPLANATION_TAG)
        .ok_or_else(|| layout("missing trailing Explanation:"))?;

    let (question, knowledge) = if template.with_knowledge {
        let (q, block) = rest
            .split_once(KNOWLEDGE_TAG)
            .ok_or_else(|| layout("missing Knowledge:"))?;
        let passages = if example.knowledge_doc_ids.len() > 1 {
            block.split(PASSAGE_SEP).map(str::to_string).collect()
        } else {
            vec![block.to_string()]
        };
        (q.to_string(), passages)
    } else {
        (rest.to_string(), Vec::new())
    };

    let (rationale, letter) = example
        .target_text
        .rsplit_once(ANSWER_TAG)
        .ok_or_else(|| layout("missing Answer:"))?;
    let mut chars = letter.chars();
    let answer = match (chars.next(), chars.next()) {
        (Some(c), None) => c,
        _ => return Err(layout("answer is not a single letter")),
    };
    Ok(ParsedExample {
        question,
        knowledge,
        rationale: rationale.to_string(),
        answer,
    })
}

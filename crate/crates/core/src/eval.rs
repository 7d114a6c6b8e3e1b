//! Hits@k against silver documents, and self-consistency answer accuracy.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use crate::answer::extract_answer;
use crate::corpus::{IndexError, PostingsIndex};
use crate::distill::{DataError, RationaleRecord};
use crate::io::{read_jsonl, JsonlError};

/// Number of silver documents per example.
pub const SILVER_DEPTH: usize = 3;

#[derive(thiserror::Error, Debug)]
pub enum EvalError {
    #[error("no silver set for example {0}")]
    MissingSilver(String),
    #[error("nothing to evaluate")]
    EmptyEvaluation,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("example {0} has no generated texts")]
    EmptyBundle(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

/// Top documents retrieved with the gold rationale as query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SilverSet {
    #[serde(rename = "id")]
    pub example_id: String,
    pub silver_doc_ids: Vec<String>,
}

/// Silver set for `record`, using rationale `j_gold` as the query.
pub fn build_silver(
    index: &PostingsIndex,
    record: &RationaleRecord,
    j_gold: usize,
) -> Result<SilverSet, EvalError> {
    let query = record.rationale_body(j_gold)?;
    let hits = index.retrieve(query, SILVER_DEPTH)?;
    Ok(SilverSet {
        example_id: record.example_id.clone(),
        silver_doc_ids: hits.into_iter().map(|h| h.doc_id).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HitsMode {
    /// Top-k contains at least one silver document.
    #[default]
    AnyOverlap,
    /// Top-k contains every silver document.
    AllSilver,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HitsResult {
    pub value: f64,
    pub evaluated: usize,
    /// Examples skipped because their silver set is empty.
    pub excluded: usize,
}

/// Fraction of examples whose top-`k` retrieved list meets `mode` against the silver set.
///
/// `retrieved` maps example id to a ranked doc-id list. Examples with an empty
/// silver set are left out of the denominator and counted in `excluded`.
pub fn hits_at_k(
    retrieved: &BTreeMap<String, Vec<String>>,
    silver: &HashMap<String, SilverSet>,
    k: usize,
    mode: HitsMode,
) -> Result<HitsResult, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let mut hits = 0usize;
    let mut evaluated = 0usize;
    let mut excluded = 0usize;
    for (id, list) in retrieved {
        let s = silver
            .get(id)
            .ok_or_else(|| EvalError::MissingSilver(id.clone()))?;
        if s.silver_doc_ids.is_empty() {
            excluded += 1;
            continue;
        }
        evaluated += 1;
        let top: HashSet<&str> = list.iter().take(k).map(String::as_str).collect();
        let hit = match mode {
            HitsMode::AnyOverlap => s.silver_doc_ids.iter().any(|d| top.contains(d.as_str())),
            HitsMode::AllSilver => s.silver_doc_ids.iter().all(|d| top.contains(d.as_str())),
        };
        if hit {
            hits += 1;
        }
    }
    let value = if evaluated == 0 {
        0.0
    } else {
        hits as f64 / evaluated as f64
    };
    Ok(HitsResult {
        value,
        evaluated,
        excluded,
    })
}

/// Sampled generations for one question plus its gold letter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionBundle {
    #[serde(rename = "id")]
    pub example_id: String,
    #[serde(rename = "texts")]
    pub generated_texts: Vec<String>,
    #[serde(rename = "gold")]
    pub gold_answer: String,
}

/// Reads `{"id", "texts", "gold"}` JSONL.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionBundle>, EvalError> {
    let bundles: Vec<PredictionBundle> = read_jsonl(path.as_ref())?;
    for b in &bundles {
        if b.generated_texts.is_empty() {
            return Err(EvalError::EmptyBundle(b.example_id.clone()));
        }
    }
    Ok(bundles)
}

/// Most frequent extracted answer; ties go to the alphabetically smallest letter.
/// Texts without an answer declaration are ignored.
pub fn majority_vote(bundle: &PredictionBundle) -> Option<char> {
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    for t in &bundle.generated_texts {
        if let Some(a) = extract_answer(t) {
            *counts.entry(a).or_default() += 1;
        }
    }
    // BTreeMap iterates letters ascending; keep the first maximum
    let mut best: Option<(char, usize)> = None;
    for (letter, n) in counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((letter, n));
        }
    }
    best.map(|(l, _)| l)
}

fn gold_letter(b: &PredictionBundle) -> Option<char> {
    let mut chars = b.gold_answer.trim().chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Some(c.to_ascii_uppercase()),
        _ => None,
    }
}

/// Fraction of bundles whose majority vote equals the gold answer.
pub fn accuracy(bundles: &[PredictionBundle]) -> Result<f64, EvalError> {
    if bundles.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }
    let correct = bundles
        .iter()
        .filter(|b| majority_vote(b).is_some() && majority_vote(b) == gold_letter(b))
        .count();
    Ok(correct as f64 / bundles.len() as f64)
}

/// JSON metrics report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub hits: BTreeMap<usize, f64>,
    pub hits_mode: HitsMode,
    pub accuracy: Option<f64>,
    pub counts: BTreeMap<String, usize>,
    pub excluded: usize,
}

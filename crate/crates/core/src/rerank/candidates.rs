use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::RerankError;
use crate::corpus::rank_order;
use crate::corpus::PostingsIndex;
use crate::distill::RationaleRecord;

/// Candidate documents for one (question, rationale) pair with their teacher
/// scores `ρ(d | rationale)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub example_id: String,
    pub j: usize,
    pub doc_ids: Vec<String>,
    pub teacher_scores: Vec<f64>,
    pub question: String,
}

/// Top-`kappa1` by the rationale query united with top-`kappa2` by the question.
///
/// Every member is scored directly against the rationale, so question-only
/// hits can have a teacher score of 0. Members are ordered by descending
/// teacher score, then doc id.
pub fn build_candidate_set(
    index: &PostingsIndex,
    record: &RationaleRecord,
    j: usize,
    kappa1: usize,
    kappa2: usize,
) -> Result<CandidateSet, RerankError> {
    let rationale = record.rationale_body(j)?;
    let mut members = BTreeSet::new();
    if kappa1 > 0 {
        members.extend(
            index
                .retrieve_ordinals(rationale, kappa1)?
                .into_iter()
                .map(|(o, _)| o),
        );
    }
    if kappa2 > 0 {
        members.extend(
            index
                .retrieve_ordinals(&record.question, kappa2)?
                .into_iter()
                .map(|(o, _)| o),
        );
    }
    if members.len() < 2 {
        return Err(RerankError::DegenerateCandidateSet {
            example_id: record.example_id.clone(),
            j,
            count: members.len(),
        });
    }
    let mut scored = members
        .into_iter()
        .map(|o| {
            Ok((
                index.doc_id(o).expect("ordinal in range"),
                index.score_text(rationale, o)?,
            ))
        })
        .collect::<Result<Vec<_>, RerankError>>()?;
    scored.sort_by(|a, b| rank_order(a.1, a.0, b.1, b.0));
    Ok(CandidateSet {
        example_id: record.example_id.clone(),
        j,
        doc_ids: scored.iter().map(|(id, _)| id.to_string()).collect(),
        teacher_scores: scored.iter().map(|&(_, s)| s).collect(),
        question: record.question.clone(),
    })
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    /// Checks the shape invariants of a set read from disk.
    pub fn validate(&self) -> Result<(), RerankError> {
        if self.doc_ids.len() != self.teacher_scores.len() {
            return Err(RerankError::MisalignedDistributions);
        }
        let distinct: BTreeSet<_> = self.doc_ids.iter().collect();
        if distinct.len() != self.doc_ids.len() || distinct.len() < 2 {
            return Err(RerankError::DegenerateCandidateSet {
                example_id: self.example_id.clone(),
                j: self.j,
                count: distinct.len(),
            });
        }
        if self.teacher_scores.iter().any(|s| !s.is_finite()) {
            return Err(RerankError::NonFinite("teacher score"));
        }
        Ok(())
    }
}

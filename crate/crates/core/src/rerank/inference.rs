use super::model::{Query, Scorer};
use super::RerankError;
use crate::corpus::Document;
use crate::corpus::{Corpus, IndexError, PostingsIndex, ScoredDoc};

/// Two-stage retrieval: BM25 top-`kappa_star` by the question, then the
/// `k` best of those by `scorer` (ties by ascending doc id).
pub fn rerank_inference(
    index: &PostingsIndex,
    corpus: &Corpus,
    scorer: &dyn Scorer,
    query: Query<'_>,
    kappa_star: usize,
    k: usize,
) -> Result<Vec<ScoredDoc>, RerankError> {
    if k == 0 || kappa_star < k {
        return Err(RerankError::Index(IndexError::InvalidK));
    }
    let candidates = index.retrieve_ordinals(query.text, kappa_star)?;
    if candidates.is_empty() {
        return Err(RerankError::EmptyCandidates(query.id.to_string()));
    }
    let docs = candidates
        .iter()
        .map(|&(o, _)| {
            let id = index.doc_id(o).expect("ordinal in range");
            corpus
                .get(id)
                .ok_or_else(|| RerankError::MissingDocument(id.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scores = scorer.score_all(query, &docs)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(RerankError::NonFinite("reranker score"));
    }
    let rescored: Vec<(usize, f64)> = candidates
        .iter()
        .zip(scores)
        .map(|(&(o, _), s)| (o, s))
        .collect();
    Ok(index.to_scored(index.top_k(rescored, k)))
}

/// Scores a document by BM25 against the query text. Reranking with it
/// reproduces plain BM25 retrieval.
#[derive(Debug, Clone, Copy)]
pub struct Bm25Scorer<'a> {
    index: &'a PostingsIndex,
    corpus: &'a Corpus,
}

impl<'a> Bm25Scorer<'a> {
    pub fn new(index: &'a PostingsIndex, corpus: &'a Corpus) -> Result<Self, RerankError> {
        corpus.check_index(index)?;
        Ok(Self { index, corpus })
    }
}

impl Scorer for Bm25Scorer<'_> {
    fn score(&self, query: Query<'_>, doc: &Document) -> Result<f64, RerankError> {
        let ordinal = self
            .corpus
            .ordinal(&doc.doc_id)
            .ok_or_else(|| RerankError::MissingDocument(doc.doc_id.clone()))?;
        Ok(self.index.score_text(query.text, ordinal)?)
    }
}

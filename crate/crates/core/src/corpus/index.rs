use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{tokenize, Document, IndexError};

pub const INDEX_FORMAT_VERSION: u32 = 1;
pub const TOKENIZER_VERSION: &str = "lower-alnum-v1";

/// Okapi BM25 saturation (`k1`) and length normalization (`b`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    fn validate(&self) -> Result<(), IndexError> {
        let ok = self.k1.is_finite() && self.k1 >= 0.0 && (0.0..=1.0).contains(&self.b);
        if ok {
            Ok(())
        } else {
            Err(IndexError::InvalidParams {
                k1: self.k1,
                b: self.b,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BuildParams {
    tokenizer_version: String,
    k1: f64,
    b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// A retrieval hit. Lists are ordered by descending score, then ascending `doc_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
    pub rank: usize,
}

/// Immutable BM25 inverted index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostingsIndex {
    format_version: u32,
    build_params: BuildParams,
    doc_count: usize,
    avg_doc_length: f64,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    vocabulary: BTreeMap<String, u32>,
    postings: Vec<Vec<Posting>>,
}

impl PostingsIndex {
    pub fn build(docs: &[Document], params: Bm25Params) -> Result<Self, IndexError> {
        params.validate()?;
        if docs.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        let mut seen = BTreeSet::new();
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut doc_lengths = Vec::with_capacity(docs.len());
        // term -> (doc ordinal -> tf); ordinals are visited in ascending order
        let mut raw: BTreeMap<String, Vec<Posting>> = BTreeMap::new();

        for (ordinal, doc) in docs.iter().enumerate() {
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(IndexError::DuplicateDocId(doc.doc_id.clone()));
            }
            let terms = tokenize(&doc.indexed_text());
            if terms.is_empty() {
                return Err(IndexError::EmptyDocument(doc.doc_id.clone()));
            }
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in &terms {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for (term, count) in tf {
                raw.entry(term).or_default().push(Posting {
                    doc: ordinal as u32,
                    tf: count,
                });
            }
            doc_ids.push(doc.doc_id.clone());
            doc_lengths.push(terms.len() as u32);
        }

        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let mut vocabulary = BTreeMap::new();
        let mut postings = Vec::with_capacity(raw.len());
        for (term_id, (term, list)) in raw.into_iter().enumerate() {
            vocabulary.insert(term, term_id as u32);
            postings.push(list);
        }

        Ok(Self {
            format_version: INDEX_FORMAT_VERSION,
            build_params: BuildParams {
                tokenizer_version: TOKENIZER_VERSION.to_string(),
                k1: params.k1,
                b: params.b,
            },
            doc_count: docs.len(),
            avg_doc_length: total as f64 / docs.len() as f64,
            doc_ids,
            doc_lengths,
            vocabulary,
            postings,
        })
    }

    pub fn params(&self) -> Bm25Params {
        Bm25Params {
            k1: self.build_params.k1,
            b: self.build_params.b,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_id(&self, ordinal: usize) -> Option<&str> {
        self.doc_ids.get(ordinal).map(String::as_str)
    }

    pub fn doc_length(&self, ordinal: usize) -> Option<u32> {
        self.doc_lengths.get(ordinal).copied()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// Postings for `term`, or `None` if it is out of vocabulary.
    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.vocabulary
            .get(term)
            .map(|&id| self.postings[id as usize].as_slice())
    }

    /// Lucene-style IDF: `ln(1 + (N - df + 0.5) / (df + 0.5))`.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.postings(term).map_or(0, <[Posting]>::len);
        idf(self.doc_count, df)
    }

    /// BM25 of `query_terms` against the document at `ordinal`.
    ///
    /// Query terms are deduplicated; unknown terms and terms missing from the
    /// document contribute nothing.
    pub fn bm25_score<S: AsRef<str>>(
        &self,
        query_terms: &[S],
        ordinal: usize,
    ) -> Result<f64, IndexError> {
        if ordinal >= self.doc_count {
            return Err(IndexError::InvalidOrdinal(ordinal));
        }
        let dl = f64::from(self.doc_lengths[ordinal]);
        let mut score = 0.0;
        for term in unique_terms(query_terms) {
            let Some(list) = self.postings(term) else {
                continue;
            };
            if let Ok(pos) = list.binary_search_by_key(&(ordinal as u32), |p| p.doc) {
                let w = idf(self.doc_count, list.len());
                score += self.term_weight(w, list[pos].tf, dl);
            }
        }
        Ok(score)
    }

    /// Tokenizes `query` and scores it against the document at `ordinal`.
    pub fn score_text(&self, query: &str, ordinal: usize) -> Result<f64, IndexError> {
        self.bm25_score(&tokenize(query), ordinal)
    }

    /// Top-`k` documents for `query` by BM25. Zero-score documents are never returned.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<ScoredDoc>, IndexError> {
        Ok(self.to_scored(self.retrieve_ordinals(query, k)?))
    }

    /// Like [`retrieve`](Self::retrieve) but yields `(ordinal, score)` pairs in rank order.
    pub fn retrieve_ordinals(
        &self,
        query: &str,
        k: usize,
    ) -> Result<Vec<(usize, f64)>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        let terms = tokenize(query);
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for term in unique_terms(&terms) {
            let Some(list) = self.postings(term) else {
                continue;
            };
            let w = idf(self.doc_count, list.len());
            for p in list {
                let dl = f64::from(self.doc_lengths[p.doc as usize]);
                *acc.entry(p.doc).or_insert(0.0) += self.term_weight(w, p.tf, dl);
            }
        }
        let hits: Vec<(usize, f64)> = acc
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(d, s)| (d as usize, s))
            .collect();
        Ok(self.top_k(hits, k))
    }

    /// Keeps the `k` best `(ordinal, score)` pairs, ordered by descending
    /// score then ascending doc id.
    pub fn top_k(&self, mut hits: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
        let cmp = |a: &(usize, f64), b: &(usize, f64)| {
            rank_order(a.1, &self.doc_ids[a.0], b.1, &self.doc_ids[b.0])
        };
        if k == 0 {
            return Vec::new();
        }
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, cmp);
            hits.truncate(k);
        }
        hits.sort_by(cmp);
        hits
    }

    /// Attaches doc ids and 1-based ranks to an already ordered list.
    pub fn to_scored(&self, ranked: Vec<(usize, f64)>) -> Vec<ScoredDoc> {
        ranked
            .into_iter()
            .enumerate()
            .map(|(i, (ordinal, score))| ScoredDoc {
                doc_id: self.doc_ids[ordinal].clone(),
                score,
                rank: i + 1,
            })
            .collect()
    }

    fn term_weight(&self, idf: f64, tf: u32, dl: f64) -> f64 {
        let Bm25Params { k1, b } = self.params();
        let tf = f64::from(tf);
        idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / self.avg_doc_length))
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("index serializes")
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let corrupt = |e: serde_json::Error| IndexError::Corrupt(e.to_string());
        let value: serde_json::Value = serde_json::from_slice(bytes).map_err(corrupt)?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| IndexError::Corrupt("missing format_version".into()))?;
        if found != u64::from(INDEX_FORMAT_VERSION) {
            return Err(IndexError::UnsupportedVersion {
                found: found as u32,
                expected: INDEX_FORMAT_VERSION,
            });
        }
        let index: Self = serde_json::from_value(value).map_err(corrupt)?;
        index.validate()?;
        Ok(index)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| IndexError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_bytes(&bytes).map_err(|e| match e {
            IndexError::Corrupt(m) => IndexError::Corrupt(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    fn validate(&self) -> Result<(), IndexError> {
        let bad = |m: &str| Err(IndexError::Corrupt(m.to_string()));
        if self.build_params.tokenizer_version != TOKENIZER_VERSION {
            return bad("unknown tokenizer version");
        }
        self.params().validate()?;
        if self.doc_count == 0
            || self.doc_ids.len() != self.doc_count
            || self.doc_lengths.len() != self.doc_count
        {
            return bad("document tables disagree with doc_count");
        }
        if self.postings.len() != self.vocabulary.len() {
            return bad("vocabulary and postings disagree");
        }
        let total: u64 = self.doc_lengths.iter().map(|&l| u64::from(l)).sum();
        if total as f64 / self.doc_count as f64 != self.avg_doc_length {
            return bad("avg_doc_length is not the mean document length");
        }
        for list in &self.postings {
            if list.is_empty()
                || list
                    .iter()
                    .any(|p| p.tf == 0 || p.doc as usize >= self.doc_count)
            {
                return bad("invalid posting");
            }
            if list.windows(2).any(|w| w[0].doc >= w[1].doc) {
                return bad("postings not strictly ascending");
            }
        }
        Ok(())
    }
}

fn idf(doc_count: usize, df: usize) -> f64 {
    let n = doc_count as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

fn unique_terms<S: AsRef<str>>(terms: &[S]) -> BTreeSet<&str> {
    terms.iter().map(AsRef::as_ref).collect()
}

/// Ranking order: higher score first, ties by ascending doc id.
pub fn rank_order(score_a: f64, id_a: &str, score_b: f64, id_b: &str) -> Ordering {
    score_b.total_cmp(&score_a).then_with(|| id_a.cmp(id_b))
}

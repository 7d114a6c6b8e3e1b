use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::featurize;
use super::RerankError;
use crate::corpus::Document;
use crate::io::read_jsonl;

pub const DEFAULT_DIM: usize = 256;

/// A query to rerank for: an id (for score-file lookups) and its text.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub id: &'a str,
    pub text: &'a str,
}

/// Query–document relevance scorer `f(d, x)`.
pub trait Scorer {
    fn score(&self, query: Query<'_>, doc: &Document) -> Result<f64, RerankError>;

    /// Scores every document for one query.
    fn score_all(&self, query: Query<'_>, docs: &[&Document]) -> Result<Vec<f64>, RerankError> {
        docs.iter().map(|d| self.score(query, d)).collect()
    }
}

/// Bilinear scorer over hashed bag-of-terms features:
/// `score = (Wq f(query)) · (Wd f(doc)) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankerModel {
    #[serde(rename = "E")]
    pub dim: usize,
    pub hash_seed: u64,
    /// Row-major `dim x dim`.
    pub query_projection: Vec<f64>,
    /// Row-major `dim x dim`.
    pub doc_projection: Vec<f64>,
    pub bias: f64,
    pub step: u64,
    #[serde(default)]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

impl RerankerModel {
    /// Identity projections, zero bias: score is the cosine of hashed features.
    pub fn identity(dim: usize, hash_seed: u64) -> Self {
        let mut eye = vec![0.0; dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = 1.0;
        }
        Self {
            dim,
            hash_seed,
            query_projection: eye.clone(),
            doc_projection: eye,
            bias: 0.0,
            step: 0,
            learning_rate: 0.0,
            seed: 0,
        }
    }

    /// Gaussian-ish random weights with the given scale (used by tests and sweeps).
    pub fn random<R: Rng>(dim: usize, hash_seed: u64, scale: f64, rng: &mut R) -> Self {
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| scale * (rng.gen::<f64>() * 2.0 - 1.0))
                .collect()
        };
        let query_projection = draw(dim * dim);
        let doc_projection = draw(dim * dim);
        let bias = scale * (rng.gen::<f64>() * 2.0 - 1.0);
        Self {
            dim,
            hash_seed,
            query_projection,
            doc_projection,
            bias,
            step: 0,
            learning_rate: 0.0,
            seed: 0,
        }
    }

    pub fn featurize(&self, text: &str) -> Vec<f64> {
        featurize(text, self.dim, self.hash_seed)
    }

    /// `W f` for a row-major `dim x dim` matrix; zero entries of `f` are skipped.
    pub(crate) fn project(&self, w: &[f64], f: &[f64]) -> Vec<f64> {
        let dim = self.dim;
        let mut out = vec![0.0; dim];
        for (b, &fb) in f.iter().enumerate() {
            if fb == 0.0 {
                continue;
            }
            for (a, o) in out.iter_mut().enumerate() {
                *o += w[a * dim + b] * fb;
            }
        }
        out
    }

    pub fn project_query(&self, features: &[f64]) -> Vec<f64> {
        self.project(&self.query_projection, features)
    }

    pub fn project_doc(&self, features: &[f64]) -> Vec<f64> {
        self.project(&self.doc_projection, features)
    }

    /// Score from already featurized texts.
    pub fn score_features(&self, query_features: &[f64], doc_features: &[f64]) -> f64 {
        dot(
            &self.project_query(query_features),
            &self.project_doc(doc_features),
        ) + self.bias
    }

    pub fn score_text(&self, doc_text: &str, query_text: &str) -> f64 {
        self.score_features(&self.featurize(query_text), &self.featurize(doc_text))
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite()
            && self.query_projection.iter().all(|x| x.is_finite())
            && self.doc_projection.iter().all(|x| x.is_finite())
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("model serializes")
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self, RerankError> {
        let model: Self =
            serde_json::from_slice(bytes).map_err(|e| RerankError::Checkpoint(e.to_string()))?;
        let n = model.dim * model.dim;
        if model.query_projection.len() != n || model.doc_projection.len() != n {
            return Err(RerankError::Checkpoint(format!(
                "projection sizes do not match E={}",
                model.dim
            )));
        }
        if !model.is_finite() {
            return Err(RerankError::NonFinite("checkpoint weight"));
        }
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RerankError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)
            .map_err(|e| RerankError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json_bytes(&bytes)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Scorer for RerankerModel {
    fn score(&self, query: Query<'_>, doc: &Document) -> Result<f64, RerankError> {
        Ok(self.score_text(&doc.indexed_text(), query.text))
    }

    fn score_all(&self, query: Query<'_>, docs: &[&Document]) -> Result<Vec<f64>, RerankError> {
        let u = self.project_query(&self.featurize(query.text));
        Ok(docs
            .iter()
            .map(|d| dot(&u, &self.project_doc(&self.featurize(&d.indexed_text()))) + self.bias)
            .collect())
    }
}

/// Scores produced by an external reranker, read from
/// `{"id": query_id, "doc_id": ..., "score": ...}` JSONL.
#[derive(Debug, Clone, Default)]
pub struct ScoreFile {
    scores: HashMap<(String, String), f64>,
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    id: String,
    doc_id: String,
    score: f64,
}

impl ScoreFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RerankError> {
        let rows: Vec<ScoreRow> = read_jsonl(path.as_ref())?;
        Ok(Self {
            scores: rows
                .into_iter()
                .map(|r| ((r.id, r.doc_id), r.score))
                .collect(),
        })
    }

    pub fn insert(&mut self, query_id: &str, doc_id: &str, score: f64) {
        self.scores
            .insert((query_id.to_string(), doc_id.to_string()), score);
    }
}

impl Scorer for ScoreFile {
    fn score(&self, query: Query<'_>, doc: &Document) -> Result<f64, RerankError> {
        self.scores
            .get(&(query.id.to_string(), doc.doc_id.clone()))
            .copied()
            .ok_or_else(|| RerankError::MissingScore {
                query_id: query.id.to_string(),
                doc_id: doc.doc_id.clone(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_query_scores_bias() {
        let mut m = RerankerModel::identity(32, 0);
        m.bias = 0.25;
        assert_eq!(m.score_text("fever and chills", ""), 0.25);
    }

    #[test]
    fn identity_self_similarity_is_one() {
        let m = RerankerModel::identity(64, 9);
        let s = m.score_text("graves disease methimazole", "graves disease methimazole");
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn token_order_does_not_matter() {
        let m = RerankerModel::random(16, 1, 0.5, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(m.score_text("a b", "q r s"), m.score_text("b a", "q r s"));
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let m = RerankerModel::random(8, 4, 1.3, &mut ChaCha8Rng::seed_from_u64(11));
        let back = RerankerModel::from_json_bytes(&m.to_json_bytes()).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            back.score_text("alpha beta", "gamma alpha").to_bits(),
            m.score_text("alpha beta", "gamma alpha").to_bits()
        );
    }

    #[test]
    fn checkpoint_size_checked() {
        let mut v: serde_json::Value =
            serde_json::from_slice(&RerankerModel::identity(4, 0).to_json_bytes()).unwrap();
        v["E"] = 5.into();
        assert!(RerankerModel::from_json_bytes(&serde_json::to_vec(&v).unwrap()).is_err());
    }

    #[test]
    fn score_file_lookup() {
        let mut sf = ScoreFile::default();
        sf.insert("q1", "d1", 2.5);
        let d1 = Document::new("d1", "", "x");
        let d2 = Document::new("d2", "", "y");
        let q = Query { id: "q1", text: "" };
        assert_eq!(sf.score(q, &d1).unwrap(), 2.5);
        assert!(matches!(
            sf.score(q, &d2),
            Err(RerankError::MissingScore { .. })
        ));
    }
}

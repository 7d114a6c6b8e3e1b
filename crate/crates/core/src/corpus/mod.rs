//! Passage corpus ingestion and BM25 retrieval.
//!
//! A [`Corpus`] holds the raw passages; a [`PostingsIndex`] is the immutable
//! inverted index built over them. The two are stored separately on disk and
//! must agree on document order (checked by [`Corpus::check_index`]).

mod index;
mod tokenize;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use index::{
    rank_order, Bm25Params, Posting, PostingsIndex, ScoredDoc, INDEX_FORMAT_VERSION,
    TOKENIZER_VERSION,
};
pub use tokenize::tokenize;

use crate::io::{read_jsonl, JsonlError};

#[derive(thiserror::Error, Debug)]
pub enum IndexError {
    #[error("duplicate document id: {0}")]
    DuplicateDocId(String),
    #[error("document {0} has no tokens")]
    EmptyDocument(String),
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("invalid document ordinal {0}")]
    InvalidOrdinal(usize),
    #[error("invalid BM25 parameters: k1={k1}, b={b}")]
    InvalidParams { k1: f64, b: f64 },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("unsupported index format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("corpus does not match index: {0}")]
    CorpusMismatch(String),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One corpus passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        title: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: title.into(),
            text: text.into(),
        }
    }

    /// Text used for indexing and reranker featurization: title and body.
    pub fn indexed_text(&self) -> String {
        if self.title.is_empty() {
            self.text.clone()
        } else {
            format!("{} {}", self.title, self.text)
        }
    }

    /// Passage as it appears in a knowledge block: `Title . body`.
    pub fn passage(&self) -> String {
        if self.title.is_empty() {
            self.text.clone()
        } else {
            format!("{} . {}", self.title, self.text)
        }
    }
}

/// An ordered collection of documents with an id lookup.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self, IndexError> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (ordinal, doc) in docs.iter().enumerate() {
            if by_id.insert(doc.doc_id.clone(), ordinal).is_some() {
                return Err(IndexError::DuplicateDocId(doc.doc_id.clone()));
            }
        }
        Ok(Self { docs, by_id })
    }

    /// Reads a `{"id", "title", "text"}` JSONL corpus.
    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        let docs: Vec<Document> = read_jsonl(path.as_ref())?;
        Self::new(docs)
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn ordinal(&self, doc_id: &str) -> Option<usize> {
        self.by_id.get(doc_id).copied()
    }

    /// Verifies that `index` was built from this corpus, in the same order.
    pub fn check_index(&self, index: &PostingsIndex) -> Result<(), IndexError> {
        if index.doc_count() != self.docs.len() {
            return Err(IndexError::CorpusMismatch(format!(
                "index has {} documents, corpus has {}",
                index.doc_count(),
                self.docs.len()
            )));
        }
        for (ordinal, doc) in self.docs.iter().enumerate() {
            if index.doc_id(ordinal) != Some(doc.doc_id.as_str()) {
                return Err(IndexError::CorpusMismatch(format!(
                    "ordinal {ordinal}: corpus has {}, index has {:?}",
                    doc.doc_id,
                    index.doc_id(ordinal)
                )));
            }
        }
        Ok(())
    }
}

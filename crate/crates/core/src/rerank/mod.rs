//! Reranker distillation: candidate sets, softmax/KL objective, training and
//! two-stage inference.

mod candidates;
mod distribution;
mod features;
mod inference;
mod model;
mod train;

pub use candidates::{build_candidate_set, CandidateSet};
pub use distribution::{kl_loss, softmax_normalize, Distribution};
pub use features::{featurize, term_hash};
pub use inference::{rerank_inference, Bm25Scorer};
pub use model::{Query, RerankerModel, ScoreFile, Scorer, DEFAULT_DIM};
pub use train::{
    argmax_agreement, loss_gradient, mean_loss, set_loss, train, Gradient, Optimizer, PreparedSet,
    TrainConfig, TrainOutcome,
};

use crate::corpus::IndexError;
use crate::distill::DataError;
use crate::io::JsonlError;

/// Default temperatures and candidate counts.
pub const DEFAULT_TAU1: f64 = 1.0;
pub const DEFAULT_TAU2: f64 = 100.0;
pub const DEFAULT_KAPPA_STAR: usize = 100;

#[derive(thiserror::Error, Debug)]
pub enum RerankError {
    #[error("candidate set for {example_id}/{j} has {count} distinct documents; need at least 2")]
    DegenerateCandidateSet {
        example_id: String,
        j: usize,
        count: usize,
    },
    #[error("temperature must be positive and finite, got {0}")]
    NonPositiveTemperature(f64),
    #[error("distributions are not over the same documents")]
    MisalignedDistributions,
    #[error("cannot normalize an empty score list")]
    EmptyScores,
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("question {0} matches no documents")]
    EmptyCandidates(String),
    #[error("document {0} is not in the corpus")]
    MissingDocument(String),
    #[error("score file has no entry for query {query_id}, document {doc_id}")]
    MissingScore { query_id: String, doc_id: String },
    #[error("no candidate sets to train on")]
    NoTrainingData,
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

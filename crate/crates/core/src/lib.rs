//! Knowledge-augmented reasoning distillation toolkit.
//!
//! BM25 indexing over a passage corpus, construction of knowledge-augmented
//! training text, a small bilinear reranker distilled from BM25 scores of
//! rationales, Hits@k and self-consistency evaluation, and a Monte-Carlo
//! memorization simulator. The `kard` binary wires these into a pipeline.

pub mod answer;
pub mod corpus;
pub mod distill;
pub mod eval;
pub mod io;
pub mod pipeline;
pub mod rerank;
pub mod sim;

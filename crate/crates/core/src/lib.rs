//! Retrieve-then-rerank core.
//!
//! Everything in this crate is pure computation over in-memory data: corpora
//! and relevance judgments, first-stage retrievers (BM25, dense, sparse
//! expansion), a small feature-based MLP reranker with hand-written backward
//! pass, the BCE / MSE / RankNet training objectives with AdamW, the
//! teacher-student distillation set builders, NDCG evaluation and the
//! synthetic distillation experiment. File formats, threading and timing live
//! in the `rerank` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;

pub mod corpus;
pub mod distill;
pub mod eval;
pub mod exec;
pub mod experiment;
pub mod features;
pub mod loss;
pub mod model;
pub mod optim;
pub mod pipeline;
pub mod ranked;
pub mod rerank;
pub mod retrieval;
pub mod synth;
pub mod text;
pub mod train;

pub use error::{Error, Result};

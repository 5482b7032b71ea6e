//! First-stage retrievers. All of them produce a [`RankedList`] of at most
//! `k0` documents through the [`Retriever`] trait.

mod bm25;
mod dense;
mod sparse;

pub use bm25::{bm25_score, Bm25Params, Bm25Retriever, InvertedIndex, Posting};
pub use dense::{dense_topk, DenseRetriever, EmbeddingTable};
pub use sparse::{sparse_topk, SparseExpansionModel, SparseRetriever, TermWeights};

use crate::corpus::Query;
use crate::ranked::RankedList;
use crate::{Error, Result};

pub trait Retriever: Send + Sync {
    /// Identifies the retriever (and its score convention) in run files.
    fn tag(&self) -> &str;

    /// Returns the `min(k0, corpus size)` best documents for `query`.
    fn retrieve(&self, query: &Query, k0: usize) -> Result<RankedList>;
}

impl<R: Retriever + ?Sized> Retriever for &R {
    fn tag(&self) -> &str {
        (**self).tag()
    }

    fn retrieve(&self, query: &Query, k0: usize) -> Result<RankedList> {
        (**self).retrieve(query, k0)
    }
}

impl<R: Retriever + ?Sized> Retriever for alloc::boxed::Box<R> {
    fn tag(&self) -> &str {
        (**self).tag()
    }

    fn retrieve(&self, query: &Query, k0: usize) -> Result<RankedList> {
        (**self).retrieve(query, k0)
    }
}

impl<R: Retriever + ?Sized> Retriever for alloc::sync::Arc<R> {
    fn tag(&self) -> &str {
        (**self).tag()
    }

    fn retrieve(&self, query: &Query, k0: usize) -> Result<RankedList> {
        (**self).retrieve(query, k0)
    }
}

pub fn retrieve_topk<R: Retriever + ?Sized>(retriever: &R, query: &Query, k0: usize) -> Result<RankedList> {
    retriever.retrieve(query, k0)
}

fn check_depth(k0: usize) -> Result<()> {
    if k0 == 0 {
        return Err(Error::Invalid("retrieval depth k0 must be at least 1".into()));
    }
    Ok(())
}

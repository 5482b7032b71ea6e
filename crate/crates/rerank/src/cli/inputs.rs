use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rerank_core::corpus::{Corpus, Query};
use rerank_core::experiment::StageOne;
use rerank_core::features::FeatureContext;
use rerank_core::rerank::{MlpScorer, PairScorer, PassthroughScorer};
use rerank_core::retrieval::{
    Bm25Params, Bm25Retriever, DenseRetriever, EmbeddingTable, InvertedIndex, Retriever, SparseExpansionModel,
    SparseRetriever,
};
use rerank_core::text::WordTokenizer;

use super::{ScorerArgs, SignalArgs};
use crate::formats::{load_checkpoint, load_corpus, load_embeddings, load_json, load_queries, load_sparse};
use crate::{Error, Result};

pub fn corpus(path: &Path) -> Result<Arc<Corpus>> {
    let docs = load_corpus(path)?;
    let corpus = Corpus::from_documents(docs).map_err(|e| Error::Core(e).context(path.display().to_string()))?;
    log::info!("loaded {} documents from {}", corpus.len(), path.display());
    Ok(Arc::new(corpus))
}

pub fn queries(path: &Path, cap: Option<usize>) -> Result<Vec<Query>> {
    let mut queries = load_queries(path)?;
    if let Some(cap) = cap {
        if cap == 0 {
            return Err(Error::Usage("--query-cap must be at least 1".into()));
        }
        queries.truncate(cap);
    }
    Ok(queries)
}

pub fn query_map(queries: &[Query]) -> HashMap<&str, &Query> {
    queries.iter().map(|q| (q.query_id.as_str(), q)).collect()
}

/// The corpus with its BM25 index and whichever precomputed signals were given.
pub struct Signals {
    pub corpus: Arc<Corpus>,
    pub index: Arc<InvertedIndex>,
    pub embeddings: Option<Arc<EmbeddingTable>>,
    pub sparse: Option<Arc<SparseExpansionModel>>,
}

impl Signals {
    pub fn load(corpus: Arc<Corpus>, args: &SignalArgs) -> Result<Self> {
        let index = match &args.index {
            Some(path) => {
                let index: InvertedIndex = load_json(path)?;
                let matches = index.doc_count() == corpus.len()
                    && (0..corpus.len()).all(|i| index.doc_id(i) == corpus.doc(i).doc_id);
                if !matches {
                    return Err(Error::Core(rerank_core::Error::Integrity(format!(
                        "index {} was not built from this corpus",
                        path.display()
                    ))));
                }
                index
            }
            None => InvertedIndex::build(&corpus, &WordTokenizer)?,
        };
        Ok(Self::new(
            corpus,
            index,
            args.embeddings.as_ref().map(load_embeddings).transpose()?.map(Arc::new),
            args.sparse.as_ref().map(load_sparse).transpose()?.map(Arc::new),
        ))
    }

    pub fn new(
        corpus: Arc<Corpus>,
        index: InvertedIndex,
        embeddings: Option<Arc<EmbeddingTable>>,
        sparse: Option<Arc<SparseExpansionModel>>,
    ) -> Self {
        Self {
            corpus,
            index: Arc::new(index),
            embeddings,
            sparse,
        }
    }

    pub fn context(&self) -> Result<FeatureContext> {
        let mut ctx = FeatureContext::new(self.corpus.clone()).with_bm25(self.index.clone(), Bm25Params::default())?;
        if let Some(e) = &self.embeddings {
            ctx = ctx.with_dense(e.clone());
        }
        if let Some(s) = &self.sparse {
            ctx = ctx.with_sparse(s.clone());
        }
        Ok(ctx)
    }

    pub fn retriever(&self, which: StageOne) -> Result<Box<dyn Retriever>> {
        Ok(match which {
            StageOne::Bm25 => Box::new(Bm25Retriever::new((*self.index).clone(), Bm25Params::default())),
            StageOne::Dense => {
                let table = self
                    .embeddings
                    .clone()
                    .ok_or_else(|| Error::Usage("the dense retriever needs --embeddings".into()))?;
                Box::new(DenseRetriever::new(table, &self.corpus)?)
            }
            StageOne::Sparse => {
                let model = self
                    .sparse
                    .clone()
                    .ok_or_else(|| Error::Usage("the sparse retriever needs --sparse".into()))?;
                Box::new(SparseRetriever::new(model, &self.corpus)?)
            }
        })
    }

    /// BM25 plus dense and sparse when their inputs are present.
    pub fn available_retrievers(&self) -> Result<Vec<Box<dyn Retriever>>> {
        let mut out = vec![self.retriever(StageOne::Bm25)?];
        if self.embeddings.is_some() {
            out.push(self.retriever(StageOne::Dense)?);
        }
        if self.sparse.is_some() {
            out.push(self.retriever(StageOne::Sparse)?);
        }
        Ok(out)
    }
}

pub fn scorer(args: &ScorerArgs, signals: &Signals) -> Result<Box<dyn PairScorer>> {
    match &args.checkpoint {
        Some(path) => {
            let (ckpt, params) = load_checkpoint(path)?;
            Ok(Box::new(MlpScorer::new(params, signals.context()?, ckpt.tag)))
        }
        None => Ok(Box::new(PassthroughScorer)),
    }
}

//! Query-document features consumed by the MLP reranker and the synthetic teacher.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::corpus::{Corpus, Document, Query};
use crate::ranked::RankedList;
use crate::retrieval::{bm25_score, Bm25Params, EmbeddingTable, InvertedIndex, SparseExpansionModel};
use crate::text::{tokenize, WordTokenizer};
use crate::{Error, Result};

pub const FEATURE_COUNT: usize = 8;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "bm25",
    "dense",
    "sparse",
    "token_overlap",
    "query_coverage",
    "log_doc_length",
    "log_query_length",
    "first_stage_rr",
];

/// Index of the first-stage reciprocal-rank feature.
pub const RECIPROCAL_RANK: usize = 7;

/// First-stage signals for one candidate. Absent values become 0.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairSignals {
    pub bm25: Option<f64>,
    pub dense: Option<f64>,
    pub sparse: Option<f64>,
    /// 1-based rank in the first-stage list.
    pub first_stage_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

pub fn extract_features(query: &Query, doc: &Document, aux: &PairSignals) -> FeatureVector {
    let q = tokenize(&query.text);
    let d = doc.tokens(&WordTokenizer);
    features_from_tokens(&q, &d, aux)
}

fn features_from_tokens(query_tokens: &[String], doc_tokens: &[String], aux: &PairSignals) -> FeatureVector {
    let mut doc_terms: Vec<String> = doc_tokens.to_vec();
    doc_terms.sort_unstable();
    doc_terms.dedup();
    features_from_terms(
        query_tokens,
        &DocTerms {
            terms: doc_terms,
            len: doc_tokens.len(),
        },
        aux,
    )
}

/// Distinct sorted terms and token count of one document.
struct DocTerms {
    terms: Vec<String>,
    len: usize,
}

impl DocTerms {
    fn of(doc: &Document) -> Self {
        let tokens = doc.tokens(&WordTokenizer);
        let len = tokens.len();
        let mut terms = tokens;
        terms.sort_unstable();
        terms.dedup();
        Self { terms, len }
    }
}

fn features_from_terms(query_tokens: &[String], doc: &DocTerms, aux: &PairSignals) -> FeatureVector {
    let query_terms: BTreeSet<&str> = query_tokens.iter().map(String::as_str).collect();
    let overlap = query_terms
        .iter()
        .filter(|t| doc.terms.binary_search_by(|d| d.as_str().cmp(t)).is_ok())
        .count();
    let coverage = if query_terms.is_empty() {
        0.0
    } else {
        overlap as f64 / query_terms.len() as f64
    };
    let rr = aux.first_stage_rank.map_or(0.0, |r| 1.0 / r as f64);
    FeatureVector(alloc::vec![
        aux.bm25.unwrap_or(0.0),
        aux.dense.unwrap_or(0.0),
        aux.sparse.unwrap_or(0.0),
        overlap as f64,
        coverage,
        libm::log1p(doc.len as f64),
        libm::log1p(query_tokens.len() as f64),
        rr,
    ])
}

/// Computes [`PairSignals`] and features for arbitrary (query, document)
/// pairs from whichever first-stage signal sources are available.
#[derive(Clone)]
pub struct FeatureContext {
    corpus: Arc<Corpus>,
    doc_terms: Arc<Vec<DocTerms>>,
    bm25: Option<(Arc<InvertedIndex>, Bm25Params)>,
    dense: Option<Arc<EmbeddingTable>>,
    sparse: Option<Arc<SparseExpansionModel>>,
}

impl FeatureContext {
    pub fn new(corpus: Arc<Corpus>) -> Self {
        Self {
            doc_terms: Arc::new(corpus.iter().map(DocTerms::of).collect()),
            corpus,
            bm25: None,
            dense: None,
            sparse: None,
        }
    }

    /// The index must have been built over this context's corpus.
    pub fn with_bm25(mut self, index: Arc<InvertedIndex>, params: Bm25Params) -> Result<Self> {
        let aligned = index.doc_count() == self.corpus.len()
            && self.corpus.iter().enumerate().all(|(i, d)| index.doc_id(i) == d.doc_id);
        if !aligned {
            return Err(Error::Integrity("bm25 index was not built over this corpus".into()));
        }
        self.bm25 = Some((index, params));
        Ok(self)
    }

    pub fn with_dense(mut self, table: Arc<EmbeddingTable>) -> Self {
        self.dense = Some(table);
        self
    }

    pub fn with_sparse(mut self, model: Arc<SparseExpansionModel>) -> Self {
        self.sparse = Some(model);
        self
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    fn signals_for(&self, query: &Query, query_tokens: &[String], ordinal: usize, rank: Option<usize>) -> PairSignals {
        let doc_id = &self.corpus.doc(ordinal).doc_id;
        PairSignals {
            bm25: self
                .bm25
                .as_ref()
                .map(|(index, params)| bm25_score(index, params, query_tokens, ordinal)),
            dense: self.dense.as_ref().and_then(|t| t.similarity(&query.query_id, doc_id)),
            sparse: self.sparse.as_ref().and_then(|m| m.pair_score(&query.query_id, doc_id)),
            first_stage_rank: rank,
        }
    }

    fn ordinal(&self, doc_id: &str) -> Result<usize> {
        self.corpus
            .ordinal(doc_id)
            .ok_or_else(|| Error::missing("document", doc_id))
    }

    pub fn signals(&self, query: &Query, doc_id: &str, rank: Option<usize>) -> Result<PairSignals> {
        let ordinal = self.ordinal(doc_id)?;
        Ok(self.signals_for(query, &tokenize(&query.text), ordinal, rank))
    }

    pub fn features(&self, query: &Query, doc_id: &str, rank: Option<usize>) -> Result<FeatureVector> {
        let ordinal = self.ordinal(doc_id)?;
        let q = tokenize(&query.text);
        let aux = self.signals_for(query, &q, ordinal, rank);
        Ok(features_from_terms(&q, &self.doc_terms[ordinal], &aux))
    }

    /// Features for every candidate, with the reciprocal-rank feature taken
    /// from the candidate's position in the list.
    pub fn candidate_features(&self, query: &Query, candidates: &RankedList) -> Result<Vec<FeatureVector>> {
        let q = tokenize(&query.text);
        candidates
            .doc_ids()
            .enumerate()
            .map(|(i, doc_id)| {
                let ordinal = self
                    .ordinal(doc_id)
                    .map_err(|e| e.context(format!("candidate list for query `{}`", query.query_id)))?;
                let aux = self.signals_for(query, &q, ordinal, Some(i + 1));
                Ok(features_from_terms(&q, &self.doc_terms[ordinal], &aux))
            })
            .collect()
    }
}

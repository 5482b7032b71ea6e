//! Learned sparse expansion retrieval over precomputed term weights.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_depth, Retriever};
use crate::corpus::{Corpus, Query};
use crate::ranked::RankedList;
use crate::{Error, Result};

pub type TermWeights = BTreeMap<String, f64>;

/// Non-negative term weights for documents and queries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseExpansionModel {
    weights: BTreeMap<String, TermWeights>,
}

impl SparseExpansionModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, weights: TermWeights) -> Result<()> {
        let id = id.into();
        if let Some((term, w)) = weights.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Integrity(format!(
                "`{id}`: weight of `{term}` is {w}, expected >= 0"
            )));
        }
        if self.weights.insert(id.clone(), weights).is_some() {
            return Err(Error::Integrity(format!("duplicate sparse weights id `{id}`")));
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&TermWeights> {
        self.weights.get(id)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TermWeights)> {
        self.weights.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Sum over query terms (in term order) of query weight times document weight.
    pub fn pair_score(&self, query_id: &str, doc_id: &str) -> Option<f64> {
        let q = self.get(query_id)?;
        let d = self.get(doc_id)?;
        let mut score = 0.0;
        for (term, qw) in q {
            if let Some(dw) = d.get(term) {
                score += qw * dw;
            }
        }
        Some(score)
    }
}

pub struct SparseRetriever {
    model: Arc<SparseExpansionModel>,
    doc_ids: Vec<String>,
    postings: BTreeMap<String, Vec<(u32, f64)>>,
    tag: String,
}

impl SparseRetriever {
    /// Every corpus document must have a weight map in `model`.
    pub fn new(model: Arc<SparseExpansionModel>, corpus: &Corpus) -> Result<Self> {
        let mut postings: BTreeMap<String, Vec<(u32, f64)>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(corpus.len());
        for (ordinal, doc) in corpus.iter().enumerate() {
            let weights = model
                .get(&doc.doc_id)
                .ok_or_else(|| Error::missing("document sparse weights", doc.doc_id.clone()))?;
            for (term, &w) in weights {
                postings.entry(term.clone()).or_default().push((ordinal as u32, w));
            }
            doc_ids.push(doc.doc_id.clone());
        }
        Ok(Self {
            model,
            doc_ids,
            postings,
            tag: String::from("sparse-dot"),
        })
    }

    pub fn model(&self) -> &SparseExpansionModel {
        &self.model
    }

    fn scan(&self, query_id: &str, k0: usize) -> Result<RankedList> {
        check_depth(k0)?;
        let q = self
            .model
            .get(query_id)
            .ok_or_else(|| Error::missing("query sparse weights", query_id))?;
        let mut scores = vec![0.0; self.doc_ids.len()];
        for (term, qw) in q {
            if let Some(list) = self.postings.get(term) {
                for &(d, dw) in list {
                    scores[d as usize] += qw * dw;
                }
            }
        }
        Ok(RankedList::from_score_vector(
            query_id,
            &self.tag,
            &self.doc_ids,
            &scores,
            k0,
        ))
    }
}

impl Retriever for SparseRetriever {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn retrieve(&self, query: &Query, k0: usize) -> Result<RankedList> {
        self.scan(&query.query_id, k0)
    }
}

pub fn sparse_topk(retriever: &SparseRetriever, query_id: &str, k0: usize) -> Result<RankedList> {
    retriever.scan(query_id, k0)
}

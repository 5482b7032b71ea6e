//! Okapi BM25 over an in-memory inverted index.
//!
//! ```text
//! score(D, Q) = sum_t IDF(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |D| / avgdl))
//! IDF(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
//! ```
//!
//! The `+1` inside the logarithm keeps IDF non-negative for every term.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_depth, Retriever};
use crate::corpus::{Corpus, Query};
use crate::ranked::RankedList;
use crate::text::{Tokenizer, WordTokenizer};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1 >= 0.0 && k1.is_finite()) || !(0.0..=1.0).contains(&b) {
            return Err(Error::Invalid(alloc::format!(
                "bm25 parameters out of range: k1={k1}, b={b}"
            )));
        }
        Ok(Self { k1, b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    /// Postings are sorted by doc ordinal.
    postings: BTreeMap<String, Vec<Posting>>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
}

impl InvertedIndex {
    /// Indexes title and text tokens of every document, in corpus order.
    pub fn build<T: Tokenizer + ?Sized>(corpus: &Corpus, tokenizer: &T) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Empty("cannot index an empty corpus".into()));
        }
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(corpus.len());
        let mut doc_lengths = Vec::with_capacity(corpus.len());
        let mut total: u64 = 0;
        for (ordinal, doc) in corpus.iter().enumerate() {
            let tokens = doc.tokens(tokenizer);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for token in &tokens {
                *tf.entry(token.clone()).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting {
                    doc: ordinal as u32,
                    tf: count,
                });
            }
            doc_ids.push(doc.doc_id.clone());
            doc_lengths.push(tokens.len() as u32);
            total += tokens.len() as u64;
        }
        let avg_doc_length = total as f64 / doc_lengths.len() as f64;
        Ok(Self {
            postings,
            doc_ids,
            doc_lengths,
            avg_doc_length,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, ordinal: usize) -> u32 {
        self.doc_lengths[ordinal]
    }

    pub fn doc_id(&self, ordinal: usize) -> &str {
        &self.doc_ids[ordinal]
    }

    pub fn doc_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn term_frequency(&self, term: &str, ordinal: usize) -> u32 {
        let list = self.postings(term);
        list.binary_search_by_key(&(ordinal as u32), |p| p.doc)
            .map_or(0, |i| list[i].tf)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count() as f64;
        let df = self.doc_frequency(term) as f64;
        libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
    }

    fn length_norm(&self, ordinal: usize, params: &Bm25Params) -> f64 {
        let rel = if self.avg_doc_length > 0.0 {
            f64::from(self.doc_lengths[ordinal]) / self.avg_doc_length
        } else {
            1.0
        };
        params.k1 * (1.0 - params.b + params.b * rel)
    }
}

#[inline]
fn term_contribution(idf: f64, tf: u32, norm: f64, k1: f64) -> f64 {
    let tf = f64::from(tf);
    idf * tf * (k1 + 1.0) / (tf + norm)
}

/// BM25 score of one document. Terms are summed in the order given; a
/// repeated query term contributes once per occurrence.
pub fn bm25_score(index: &InvertedIndex, params: &Bm25Params, query_terms: &[String], doc: usize) -> f64 {
    let norm = index.length_norm(doc, params);
    let mut score = 0.0;
    for term in query_terms {
        let tf = index.term_frequency(term, doc);
        if tf > 0 {
            score += term_contribution(index.idf(term), tf, norm, params.k1);
        }
    }
    score
}

pub struct Bm25Retriever<T = WordTokenizer> {
    index: InvertedIndex,
    params: Bm25Params,
    tokenizer: T,
    tag: String,
}

impl Bm25Retriever<WordTokenizer> {
    pub fn new(index: InvertedIndex, params: Bm25Params) -> Self {
        Self::with_tokenizer(index, params, WordTokenizer)
    }
}

impl<T: Tokenizer> Bm25Retriever<T> {
    pub fn with_tokenizer(index: InvertedIndex, params: Bm25Params, tokenizer: T) -> Self {
        Self {
            index,
            params,
            tokenizer,
            tag: String::from("bm25"),
        }
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn params(&self) -> &Bm25Params {
        &self.params
    }

    /// Scores every document; untouched documents keep score 0.
    pub fn score_all(&self, query_terms: &[String]) -> Vec<f64> {
        let n = self.index.doc_count();
        let mut scores = vec![0.0; n];
        let norms: Vec<f64> = (0..n).map(|d| self.index.length_norm(d, &self.params)).collect();
        for term in query_terms {
            let idf = self.index.idf(term);
            for p in self.index.postings(term) {
                let d = p.doc as usize;
                scores[d] += term_contribution(idf, p.tf, norms[d], self.params.k1);
            }
        }
        scores
    }
}

impl<T: Tokenizer + Send + Sync> Retriever for Bm25Retriever<T> {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn retrieve(&self, query: &Query, k0: usize) -> Result<RankedList> {
        check_depth(k0)?;
        let terms = self.tokenizer.tokenize(&query.text);
        let scores = self.score_all(&terms);
        Ok(RankedList::from_score_vector(
            &query.query_id,
            &self.tag,
            &self.index.doc_ids,
            &scores,
            k0,
        ))
    }
}

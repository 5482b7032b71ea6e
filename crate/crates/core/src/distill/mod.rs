//! Distillation corpus construction: pool candidates from several
//! retrievers, score them with a teacher, and turn the scores into MSE pair
//! sets and RankNet permutation sets.

mod teacher;

pub use teacher::{FileTeacher, HiddenMlpTeacher, Teacher};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Query;
use crate::ranked::{rank_order, RankedEntry};
use crate::retrieval::Retriever;
use crate::train::{PermutationSample, RegressionPairSample};
use crate::{Error, Result};

/// Candidates retrieved per retriever when mining.
pub const DEFAULT_PER_RETRIEVER_K: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceHit {
    pub source: String,
    /// 1-based rank in that retriever's list.
    pub rank: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolCandidate {
    pub doc_id: String,
    pub hits: Vec<SourceHit>,
}

impl PoolCandidate {
    pub fn best_rank(&self) -> usize {
        self.hits.iter().map(|h| h.rank).min().unwrap_or(usize::MAX)
    }
}

/// Deduplicated union of several retrievers' top lists for one query,
/// sorted by doc id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub query_id: String,
    pub candidates: Vec<PoolCandidate>,
}

impl CandidatePool {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&PoolCandidate> {
        self.candidates
            .binary_search_by(|c| c.doc_id.as_str().cmp(doc_id))
            .ok()
            .map(|i| &self.candidates[i])
    }
}

/// Unions the top `per_retriever_k` lists of every retriever, merging
/// duplicate documents while keeping each source's rank and score.
pub fn mine_candidates(query: &Query, retrievers: &[&dyn Retriever], per_retriever_k: usize) -> Result<CandidatePool> {
    if per_retriever_k == 0 {
        return Err(Error::Invalid("per_retriever_k must be at least 1".into()));
    }
    let mut merged: BTreeMap<String, Vec<SourceHit>> = BTreeMap::new();
    for retriever in retrievers {
        let list = retriever.retrieve(query, per_retriever_k)?;
        for (i, e) in list.entries().iter().enumerate() {
            merged.entry(e.doc_id.clone()).or_default().push(SourceHit {
                source: String::from(retriever.tag()),
                rank: i + 1,
                score: e.score,
            });
        }
    }
    Ok(CandidatePool {
        query_id: query.query_id.clone(),
        candidates: merged
            .into_iter()
            .map(|(doc_id, hits)| PoolCandidate { doc_id, hits })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryScores {
    pub query_id: String,
    pub scores: BTreeMap<String, f64>,
}

/// Teacher scores per query, in query order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherScores {
    pub teacher_tag: String,
    pub queries: Vec<QueryScores>,
}

impl TeacherScores {
    pub fn new(teacher_tag: impl Into<String>) -> Self {
        Self {
            teacher_tag: teacher_tag.into(),
            queries: Vec::new(),
        }
    }

    pub fn pair_count(&self) -> usize {
        self.queries.iter().map(|q| q.scores.len()).sum()
    }
}

/// One teacher score per pool candidate.
pub fn score_pool<T: Teacher + ?Sized>(teacher: &T, query: &Query, pool: &CandidatePool) -> Result<QueryScores> {
    let mut scores = BTreeMap::new();
    for c in &pool.candidates {
        let s = teacher
            .score(query, &c.doc_id)
            .map_err(|e| e.context(format!("teacher on ({}, {})", query.query_id, c.doc_id)))?;
        if !s.is_finite() {
            return Err(Error::NonFinite(format!(
                "teacher score for ({}, {})",
                query.query_id, c.doc_id
            )));
        }
        scores.insert(c.doc_id.clone(), s);
    }
    Ok(QueryScores {
        query_id: query.query_id.clone(),
        scores,
    })
}

/// Scores every pool. A query whose scoring fails is dropped and reported
/// alongside the result.
pub fn score_pools<T: Teacher + ?Sized>(
    teacher: &T,
    queries: &[Query],
    pools: &[CandidatePool],
) -> Result<(TeacherScores, Vec<(String, Error)>)> {
    let by_id: BTreeMap<&str, &Query> = queries.iter().map(|q| (q.query_id.as_str(), q)).collect();
    let mut out = TeacherScores::new(teacher.tag());
    let mut failures = Vec::new();
    for pool in pools {
        let query = by_id
            .get(pool.query_id.as_str())
            .ok_or_else(|| Error::missing("query", pool.query_id.clone()))?;
        match score_pool(teacher, query, pool) {
            Ok(scores) => out.queries.push(scores),
            Err(e) => failures.push((pool.query_id.clone(), e)),
        }
    }
    Ok((out, failures))
}

/// One regression sample per scored pair, in query order then doc id.
/// Also returns the queries that contributed nothing.
pub fn build_mse_set(scores: &TeacherScores) -> (Vec<RegressionPairSample>, Vec<String>) {
    let mut samples = Vec::with_capacity(scores.pair_count());
    let mut empty = Vec::new();
    for q in &scores.queries {
        if q.scores.is_empty() {
            empty.push(q.query_id.clone());
        }
        for (doc_id, &s) in &q.scores {
            samples.push(RegressionPairSample {
                query_id: q.query_id.clone(),
                doc_id: doc_id.clone(),
                teacher_score: s,
            });
        }
    }
    (samples, empty)
}

/// Documents of one query sorted by teacher score (ties by doc id), best first.
pub fn teacher_order(scores: &QueryScores) -> Vec<String> {
    let mut entries: Vec<RankedEntry> = scores
        .scores
        .iter()
        .map(|(d, &s)| RankedEntry::new(d.as_str(), s))
        .collect();
    entries.sort_by(rank_order);
    entries.into_iter().map(|e| e.doc_id).collect()
}

/// Teacher-ordered lists truncated to `list_length`. Queries with fewer
/// than two scored candidates are skipped and returned separately.
pub fn build_permutation_set(
    scores: &TeacherScores,
    list_length: usize,
) -> Result<(Vec<PermutationSample>, Vec<String>)> {
    if list_length < 2 {
        return Err(Error::Invalid(format!(
            "list length must be at least 2, got {list_length}"
        )));
    }
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for q in &scores.queries {
        if q.scores.len() < 2 {
            skipped.push(q.query_id.clone());
            continue;
        }
        let mut order = teacher_order(q);
        order.truncate(list_length);
        samples.push(PermutationSample::new(q.query_id.clone(), order)?);
    }
    Ok((samples, skipped))
}

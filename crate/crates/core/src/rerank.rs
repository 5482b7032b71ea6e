//! Second-stage reranking of a first-stage candidate list.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Corpus, Qrels, Query};
use crate::features::FeatureContext;
use crate::model::ScorerParams;
use crate::ranked::{RankedEntry, RankedList};
use crate::{Error, Result};

/// Scores every candidate of a list for one query.
pub trait PairScorer: Send + Sync {
    /// Tag written into the output list; `None` keeps the input list's tag.
    fn tag(&self) -> Option<&str>;

    /// One score per candidate, in candidate order.
    fn score_candidates(&self, query: &Query, candidates: &RankedList) -> Result<Vec<f64>>;
}

impl<S: PairScorer + ?Sized> PairScorer for &S {
    fn tag(&self) -> Option<&str> {
        (**self).tag()
    }

    fn score_candidates(&self, query: &Query, candidates: &RankedList) -> Result<Vec<f64>> {
        (**self).score_candidates(query, candidates)
    }
}

impl<S: PairScorer + ?Sized> PairScorer for alloc::boxed::Box<S> {
    fn tag(&self) -> Option<&str> {
        (**self).tag()
    }

    fn score_candidates(&self, query: &Query, candidates: &RankedList) -> Result<Vec<f64>> {
        (**self).score_candidates(query, candidates)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RerankRequest<'a> {
    pub query: &'a Query,
    pub candidates: &'a RankedList,
    /// Output depth; truncates to the candidate count when larger.
    pub k: usize,
}

/// Scores every candidate and returns the top `k` by reranker score, ties by
/// ascending doc id. The output never contains documents outside the input.
pub fn rerank<S: PairScorer + ?Sized>(scorer: &S, request: &RerankRequest<'_>, corpus: &Corpus) -> Result<RankedList> {
    check_nonempty(request)?;
    if let Some(missing) = request.candidates.doc_ids().find(|id| !corpus.contains(id)) {
        return Err(Error::missing("document", missing));
    }
    let scores = scorer.score_candidates(request.query, request.candidates)?;
    rank_by_scores(request, &scores, scorer.tag())
}

fn check_nonempty(request: &RerankRequest<'_>) -> Result<()> {
    if request.candidates.is_empty() {
        return Err(Error::Empty(format!(
            "no candidates to rerank for query `{}`",
            request.query.query_id
        )));
    }
    Ok(())
}

/// The ordering step of [`rerank`] for scores computed elsewhere, one per
/// candidate. `tag` of `None` keeps the candidates' source tag.
pub fn rank_by_scores(request: &RerankRequest<'_>, scores: &[f64], tag: Option<&str>) -> Result<RankedList> {
    check_nonempty(request)?;
    let candidates = request.candidates;
    if scores.len() != candidates.len() {
        return Err(Error::Shape(format!(
            "scorer returned {} scores for {} candidates",
            scores.len(),
            candidates.len()
        )));
    }
    let entries: Vec<RankedEntry> = candidates
        .entries()
        .iter()
        .zip(scores)
        .map(|(e, &s)| RankedEntry::new(e.doc_id.as_str(), s))
        .collect();
    let tag = tag.unwrap_or(&candidates.source_tag);
    Ok(RankedList::from_unique(
        &request.query.query_id,
        tag,
        entries,
        request.k,
    ))
}

/// The feature MLP reranker.
pub struct MlpScorer {
    params: ScorerParams,
    context: FeatureContext,
    tag: String,
}

impl MlpScorer {
    pub fn new(params: ScorerParams, context: FeatureContext, tag: impl Into<String>) -> Self {
        Self {
            params,
            context,
            tag: tag.into(),
        }
    }

    pub fn params(&self) -> &ScorerParams {
        &self.params
    }
}

impl PairScorer for MlpScorer {
    fn tag(&self) -> Option<&str> {
        Some(&self.tag)
    }

    fn score_candidates(&self, query: &Query, candidates: &RankedList) -> Result<Vec<f64>> {
        let feats = self.context.candidate_features(query, candidates)?;
        self.params.forward_batch(&feats)
    }
}

/// Keeps the first-stage scores and tag.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassthroughScorer;

impl PairScorer for PassthroughScorer {
    fn tag(&self) -> Option<&str> {
        None
    }

    fn score_candidates(&self, _query: &Query, candidates: &RankedList) -> Result<Vec<f64>> {
        Ok(candidates.entries().iter().map(|e| e.score).collect())
    }
}

/// Scores candidates by their relevance grade (unjudged = 0). With
/// `negate`, ranks the worst documents first.
#[derive(Debug, Clone)]
pub struct OracleScorer {
    qrels: Qrels,
    negate: bool,
    tag: String,
}

impl OracleScorer {
    pub fn new(qrels: Qrels) -> Self {
        Self {
            qrels,
            negate: false,
            tag: String::from("oracle"),
        }
    }

    pub fn adversarial(qrels: Qrels) -> Self {
        Self {
            qrels,
            negate: true,
            tag: String::from("oracle-negated"),
        }
    }
}

impl PairScorer for OracleScorer {
    fn tag(&self) -> Option<&str> {
        Some(&self.tag)
    }

    fn score_candidates(&self, query: &Query, candidates: &RankedList) -> Result<Vec<f64>> {
        let sign = if self.negate { -1.0 } else { 1.0 };
        Ok(candidates
            .doc_ids()
            .map(|d| sign * f64::from(self.qrels.grade(&query.query_id, d).unwrap_or(0)))
            .collect())
    }
}

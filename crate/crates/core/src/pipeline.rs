//! Stage 1 (retrieve top-k0) and stage 2 (rerank to top-k) over a benchmark.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::num::NonZeroUsize;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dataset, DatasetGroup, Query};
use crate::eval::{aggregate, evaluate_run, EvalReport, Gain, RunEvaluation, DEFAULT_CUTOFF};
use crate::exec::Executor;
use crate::ranked::RankedList;
use crate::rerank::{rerank, PairScorer, RerankRequest};
use crate::retrieval::Retriever;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Candidate depth handed to the reranker.
    pub k0: usize,
    /// Reranker output depth, `k <= k0`.
    pub k: usize,
    pub query_cap: usize,
    /// NDCG cutoff.
    pub cutoff: usize,
    pub gain: Gain,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k0: 100,
            k: 10,
            query_cap: 1000,
            cutoff: DEFAULT_CUTOFF,
            gain: Gain::Linear,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.k0 {
            return Err(Error::Invalid(format!(
                "need 1 <= k <= k0, got k={}, k0={}",
                self.k, self.k0
            )));
        }
        if self.query_cap == 0 || self.cutoff == 0 {
            return Err(Error::Invalid("query cap and cutoff must be at least 1".into()));
        }
        Ok(())
    }

    fn cap(&self) -> NonZeroUsize {
        NonZeroUsize::new(self.query_cap).unwrap_or(NonZeroUsize::MIN)
    }
}

/// Stage-1 candidates and the reranked list for one query.
pub fn run_query<R, S>(
    retriever: &R,
    scorer: &S,
    corpus: &Corpus,
    query: &Query,
    config: &PipelineConfig,
) -> Result<(RankedList, RankedList)>
where
    R: Retriever + ?Sized,
    S: PairScorer + ?Sized,
{
    let stage1 = retriever.retrieve(query, config.k0)?;
    let reranked = rerank(
        scorer,
        &RerankRequest {
            query,
            candidates: &stage1,
            k: config.k,
        },
        corpus,
    )?;
    Ok((stage1, reranked))
}

#[derive(Debug, Clone)]
pub struct DatasetRun {
    pub dataset: String,
    pub group: DatasetGroup,
    pub stage1: Vec<RankedList>,
    pub reranked: Vec<RankedList>,
    pub baseline: RunEvaluation,
    pub model: RunEvaluation,
}

/// Caps queries, retrieves, reranks and evaluates both stages on one dataset.
pub fn run_dataset<R, S, E>(
    dataset: &Dataset,
    retriever: &R,
    scorer: &S,
    config: &PipelineConfig,
    exec: &E,
) -> Result<DatasetRun>
where
    R: Retriever + ?Sized,
    S: PairScorer + ?Sized,
    E: Executor,
{
    config.validate()?;
    let capped = dataset.cap_queries(config.cap());
    let corpus = &capped.corpus;
    let results = exec
        .try_map(&capped.queries, |q| run_query(retriever, scorer, corpus, q, config))
        .map_err(|e| e.context(format!("dataset {}", dataset.name)))?;
    let (stage1, reranked): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let baseline = evaluate_run(&stage1, &capped, config.cutoff, config.gain)?;
    let model = evaluate_run(&reranked, &capped, config.cutoff, config.gain)?;
    Ok(DatasetRun {
        dataset: dataset.name.clone(),
        group: dataset.group.clone(),
        stage1,
        reranked,
        baseline,
        model,
    })
}

pub struct BenchmarkReport {
    pub baseline: EvalReport,
    pub model: EvalReport,
    pub runs: Vec<DatasetRun>,
}

/// Stage-1 retriever and reranker for one dataset.
pub type StageBuilder<'a> = dyn Fn(&Dataset) -> Result<(Box<dyn Retriever>, Box<dyn PairScorer>)> + 'a;

/// Runs every dataset with the same retriever family and reranker, and
/// reports the reranker against the fixed-retriever baseline.
pub fn run_benchmark<E: Executor>(
    config: &PipelineConfig,
    benchmark: &[Dataset],
    build: &StageBuilder<'_>,
    model_tag: &str,
    baseline_tag: &str,
    exec: &E,
) -> Result<BenchmarkReport> {
    config.validate()?;
    let mut runs = Vec::with_capacity(benchmark.len());
    for dataset in benchmark {
        let (retriever, scorer) = build(dataset).map_err(|e| e.context(format!("dataset {}", dataset.name)))?;
        runs.push(run_dataset(dataset, &*retriever, &*scorer, config, exec)?);
    }
    let groups: BTreeMap<String, DatasetGroup> = runs.iter().map(|r| (r.dataset.clone(), r.group.clone())).collect();
    let base_scores = runs.iter().map(|r| (r.dataset.clone(), r.baseline.mean)).collect();
    let model_scores = runs.iter().map(|r| (r.dataset.clone(), r.model.mean)).collect();
    let baseline = aggregate(baseline_tag, &base_scores, &groups, None)?;
    let model = aggregate(model_tag, &model_scores, &groups, Some(&baseline))?;
    Ok(BenchmarkReport { baseline, model, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let bad = PipelineConfig {
            k: 200,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}

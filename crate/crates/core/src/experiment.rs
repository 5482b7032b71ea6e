//! End-to-end distillation study on a synthetic world: mine candidates,
//! label them with a hidden teacher, train a pointwise (MSE) and a listwise
//! (RankNet) student from the same initialisation, and compare all systems
//! on a held-out query set judged by the teacher.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, DatasetGroup, Qrels, Query};
use crate::distill::{
    build_mse_set, build_permutation_set, mine_candidates, score_pool, teacher_order, CandidatePool, HiddenMlpTeacher,
    QueryScores, Teacher, TeacherScores, DEFAULT_PER_RETRIEVER_K,
};
use crate::eval::{evaluate_run, kendall_tau, RunEvaluation};
use crate::exec::Executor;
use crate::features::{FeatureContext, FeatureVector, FEATURE_COUNT};
use crate::model::{ScorerParams, DEFAULT_HIDDEN};
use crate::optim::Schedule;
use crate::pipeline::PipelineConfig;
use crate::ranked::RankedList;
use crate::rerank::{rank_by_scores, MlpScorer, PairScorer, PassthroughScorer, RerankRequest};
use crate::retrieval::{Bm25Params, Bm25Retriever, DenseRetriever, InvertedIndex, Retriever, SparseRetriever};
use crate::synth::{generate, SyntheticSpec, SyntheticWorld};
use crate::text::WordTokenizer;
use crate::train::{train, LossKind, LossRecord, TrainConfig, TrainingSet, DEFAULT_LIST_LENGTH};
use crate::{Error, Result};

/// First-stage retriever used at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageOne {
    Bm25,
    Dense,
    Sparse,
}

impl StageOne {
    pub fn as_str(self) -> &'static str {
        match self {
            StageOne::Bm25 => "bm25",
            StageOne::Dense => "dense",
            StageOne::Sparse => "sparse",
        }
    }
}

impl core::str::FromStr for StageOne {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bm25" => Ok(StageOne::Bm25),
            "dense" => Ok(StageOne::Dense),
            "sparse" => Ok(StageOne::Sparse),
            other => Err(Error::Invalid(format!(
                "unknown retriever `{other}` (bm25, dense, sparse)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub world: SyntheticSpec,
    pub world_seed: u64,
    pub teacher_seed: u64,
    pub teacher_hidden: usize,
    pub student_hidden: usize,
    pub init_seed: u64,
    pub per_retriever_k: usize,
    pub list_length: usize,
    pub stage_one: StageOne,
    pub pipeline: PipelineConfig,
    pub mse: TrainConfig,
    pub ranknet: TrainConfig,
}

impl ExperimentSpec {
    /// Default study with every seed derived from `seed`.
    pub fn with_seed(seed: u64) -> Self {
        let mut mse = TrainConfig {
            epochs: 20,
            batch_size: 32,
            peak_lr: 1e-3,
            schedule: Schedule::LinearDecay,
            ..TrainConfig::pointwise()
        };
        let mut ranknet = TrainConfig {
            epochs: 20,
            batch_size: 32,
            peak_lr: 1e-2,
            schedule: Schedule::LinearDecay,
            ..TrainConfig::listwise()
        };
        mse.seed = seed.wrapping_add(3);
        ranknet.seed = seed.wrapping_add(3);
        Self {
            world: SyntheticSpec::default(),
            world_seed: seed,
            teacher_seed: seed.wrapping_add(1),
            teacher_hidden: DEFAULT_HIDDEN,
            student_hidden: DEFAULT_HIDDEN,
            init_seed: seed.wrapping_add(2),
            per_retriever_k: DEFAULT_PER_RETRIEVER_K,
            list_length: DEFAULT_LIST_LENGTH,
            stage_one: StageOne::Dense,
            pipeline: PipelineConfig::default(),
            mse,
            ranknet,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.pipeline.validate()?;
        self.mse.validate()?;
        self.ranknet.validate()?;
        if self.world.train_queries == 0 {
            return Err(Error::Empty("the experiment needs at least one training query".into()));
        }
        if self.world.eval_queries == 0 {
            return Err(Error::Empty(
                "the experiment needs at least one evaluation query".into(),
            ));
        }
        if self.per_retriever_k == 0 || self.teacher_hidden == 0 || self.student_hidden == 0 {
            return Err(Error::Invalid(
                "per_retriever_k and hidden sizes must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

/// All retrievers, feature context and teacher of a synthetic world.
pub struct Environment {
    pub world: SyntheticWorld,
    pub bm25: Bm25Retriever,
    pub dense: DenseRetriever,
    pub sparse: SparseRetriever,
    pub context: FeatureContext,
    pub teacher: HiddenMlpTeacher,
}

impl Environment {
    pub fn build(spec: &ExperimentSpec) -> Result<Self> {
        let world = generate(&spec.world, spec.world_seed)?;
        let index = InvertedIndex::build(&world.corpus, &WordTokenizer)?;
        let params = Bm25Params::default();
        let context = FeatureContext::new(world.corpus.clone())
            .with_bm25(Arc::new(index.clone()), params)?
            .with_dense(world.embeddings.clone())
            .with_sparse(world.sparse.clone());
        Ok(Self {
            bm25: Bm25Retriever::new(index, params),
            dense: DenseRetriever::new(world.embeddings.clone(), &world.corpus)?,
            sparse: SparseRetriever::new(world.sparse.clone(), &world.corpus)?,
            teacher: HiddenMlpTeacher::new(spec.teacher_seed, spec.teacher_hidden, context.clone()),
            context,
            world,
        })
    }

    pub fn stage_one(&self, which: StageOne) -> &dyn Retriever {
        match which {
            StageOne::Bm25 => &self.bm25,
            StageOne::Dense => &self.dense,
            StageOne::Sparse => &self.sparse,
        }
    }

    pub fn retrievers(&self) -> [&dyn Retriever; 3] {
        [&self.bm25, &self.dense, &self.sparse]
    }
}

/// Relevance grades from the teacher's order over `scores`: the top 5% get
/// grade 3, the next 10% grade 2, the next 15% grade 1, the rest 0.
pub fn teacher_grades(scores: &QueryScores) -> BTreeMap<String, u32> {
    let order = teacher_order(scores);
    let n = order.len();
    order
        .into_iter()
        .enumerate()
        .map(|(p, d)| {
            let grade = match p * 100 {
                x if x < 5 * n => 3,
                x if x < 15 * n => 2,
                x if x < 30 * n => 1,
                _ => 0,
            };
            (d, grade)
        })
        .collect()
}

/// Judged evaluation dataset: every stage-1 candidate of every query is
/// graded by the teacher.
pub fn judge_stage_one<E: Executor>(
    env: &Environment,
    queries: &[Query],
    stage1: &[RankedList],
    exec: &E,
) -> Result<Dataset> {
    let pairs: Vec<(&Query, &RankedList)> = queries.iter().zip(stage1).collect();
    let judged = exec.try_map(&pairs, |(q, list)| {
        let scores = PairScorer::score_candidates(&env.teacher, q, list)?;
        Ok(QueryScores {
            query_id: q.query_id.clone(),
            scores: list.doc_ids().map(String::from).zip(scores).collect(),
        })
    })?;
    let mut qrels = Qrels::new();
    for q in &judged {
        for (d, g) in teacher_grades(q) {
            qrels.insert(q.query_id.clone(), d, g);
        }
    }
    Dataset::new(
        "synthetic-eval",
        DatasetGroup::Custom("synthetic".into()),
        env.world.corpus.clone(),
        queries.to_vec(),
        qrels,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemResult {
    pub system: String,
    pub ndcg: f64,
    /// Mean per-query Kendall tau between the system's scores and the
    /// teacher's over the stage-1 candidates.
    pub kendall_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub world_seed: u64,
    pub teacher_tag: String,
    pub stage_one: StageOne,
    pub cutoff: usize,
    pub train_queries: usize,
    pub eval_queries: usize,
    pub mean_pool_size: f64,
    pub mse_samples: usize,
    pub permutation_samples: usize,
    pub skipped_queries: usize,
    pub mse_epoch_losses: Vec<f64>,
    pub ranknet_epoch_losses: Vec<f64>,
    /// Retriever, MSE student, RankNet student, teacher.
    pub systems: Vec<SystemResult>,
}

impl ExperimentReport {
    pub fn system(&self, name: &str) -> Option<&SystemResult> {
        self.systems.iter().find(|s| s.system == name)
    }
}

pub const MSE_SYSTEM: &str = "student-mse";
pub const RANKNET_SYSTEM: &str = "student-ranknet";

pub struct ExperimentArtifacts {
    pub env: Environment,
    pub pools: Vec<CandidatePool>,
    pub teacher_scores: TeacherScores,
    pub initial: ScorerParams,
    pub mse_student: ScorerParams,
    pub ranknet_student: ScorerParams,
    pub mse_log: Vec<LossRecord>,
    pub ranknet_log: Vec<LossRecord>,
    pub eval_dataset: Dataset,
    pub stage1: Vec<RankedList>,
    /// Reranked top-k lists per system, in evaluation-query order.
    pub runs: BTreeMap<String, Vec<RankedList>>,
    pub evaluations: BTreeMap<String, RunEvaluation>,
}

/// Training features: the first-stage rank feature is the candidate's best
/// rank across the mining retrievers.
fn training_features<E: Executor>(
    env: &Environment,
    queries: &[Query],
    pools: &[CandidatePool],
    exec: &E,
) -> Result<BTreeMap<(String, String), FeatureVector>> {
    let pairs: Vec<(&Query, &CandidatePool)> = queries.iter().zip(pools).collect();
    let per_query = exec.try_map(&pairs, |(q, pool)| {
        pool.candidates
            .iter()
            .map(|c| {
                let f = env.context.features(q, &c.doc_id, Some(c.best_rank()))?;
                Ok(((q.query_id.clone(), c.doc_id.clone()), f))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_query.into_iter().flatten().collect())
}

pub fn run_distillation_experiment<E: Executor>(
    spec: &ExperimentSpec,
    exec: &E,
) -> Result<(ExperimentReport, ExperimentArtifacts)> {
    spec.validate()?;
    let env = Environment::build(spec)?;
    let train_queries = &env.world.train_queries;

    let retrievers = env.retrievers();
    let pools = exec.try_map(train_queries, |q| mine_candidates(q, &retrievers, spec.per_retriever_k))?;
    let mut teacher_scores = TeacherScores::new(Teacher::tag(&env.teacher));
    let pairs: Vec<(&Query, &CandidatePool)> = train_queries.iter().zip(&pools).collect();
    teacher_scores.queries = exec.try_map(&pairs, |(q, pool)| score_pool(&env.teacher, q, pool))?;

    let (mse_samples, _) = build_mse_set(&teacher_scores);
    let (perm_samples, skipped) = build_permutation_set(&teacher_scores, spec.list_length)?;
    let features = training_features(&env, train_queries, &pools, exec)?;

    let initial = ScorerParams::seeded(FEATURE_COUNT, spec.student_hidden, spec.init_seed);
    let mse_set = TrainingSet::Mse(mse_samples);
    let perm_set = TrainingSet::RankNet(perm_samples);
    let mse = train(initial.clone(), &mse_set, LossKind::Mse, &spec.mse, &features)
        .map_err(|e| e.context("training the MSE student"))?;
    let ranknet = train(initial.clone(), &perm_set, LossKind::RankNet, &spec.ranknet, &features)
        .map_err(|e| e.context("training the RankNet student"))?;

    let eval_queries = &env.world.eval_queries;
    let stage_one = env.stage_one(spec.stage_one);
    let config = &spec.pipeline;
    let stage1 = exec.try_map(eval_queries, |q| stage_one.retrieve(q, config.k0))?;
    let eval_dataset = judge_stage_one(&env, eval_queries, &stage1, exec)?;
    let items: Vec<usize> = (0..eval_queries.len()).collect();
    let teacher_candidate_scores = exec.try_map(&items, |&i| {
        PairScorer::score_candidates(&env.teacher, &eval_queries[i], &stage1[i])
    })?;

    let mse_scorer = MlpScorer::new(mse.params.clone(), env.context.clone(), MSE_SYSTEM);
    let ranknet_scorer = MlpScorer::new(ranknet.params.clone(), env.context.clone(), RANKNET_SYSTEM);
    let systems: [(String, &dyn PairScorer); 4] = [
        (String::from(stage_one.tag()), &PassthroughScorer),
        (String::from(MSE_SYSTEM), &mse_scorer),
        (String::from(RANKNET_SYSTEM), &ranknet_scorer),
        (String::from(Teacher::tag(&env.teacher)), &env.teacher),
    ];

    let mut runs = BTreeMap::new();
    let mut evaluations = BTreeMap::new();
    let mut results = Vec::with_capacity(systems.len());
    for (name, scorer) in systems {
        let scored = exec.try_map(&items, |&i| {
            let request = RerankRequest {
                query: &eval_queries[i],
                candidates: &stage1[i],
                k: config.k,
            };
            let scores = scorer.score_candidates(request.query, request.candidates)?;
            let tau = kendall_tau(&scores, &teacher_candidate_scores[i])?;
            Ok((rank_by_scores(&request, &scores, scorer.tag())?, tau))
        })?;
        let (reranked, taus): (Vec<_>, Vec<f64>) = scored.into_iter().unzip();
        let evaluation = evaluate_run(&reranked, &eval_dataset, config.cutoff, config.gain)?;
        results.push(SystemResult {
            system: name.clone(),
            ndcg: evaluation.mean,
            kendall_tau: taus.iter().sum::<f64>() / taus.len() as f64,
        });
        runs.insert(name.clone(), reranked);
        evaluations.insert(name, evaluation);
    }

    let report = ExperimentReport {
        world_seed: spec.world_seed,
        teacher_tag: String::from(Teacher::tag(&env.teacher)),
        stage_one: spec.stage_one,
        cutoff: config.cutoff,
        train_queries: train_queries.len(),
        eval_queries: eval_queries.len(),
        mean_pool_size: pools.iter().map(CandidatePool::len).sum::<usize>() as f64 / pools.len() as f64,
        mse_samples: mse_set.len(),
        permutation_samples: perm_set.len(),
        skipped_queries: skipped.len(),
        mse_epoch_losses: mse.epoch_losses,
        ranknet_epoch_losses: ranknet.epoch_losses,
        systems: results,
    };
    let artifacts = ExperimentArtifacts {
        pools,
        teacher_scores,
        initial,
        mse_student: mse.params,
        ranknet_student: ranknet.params,
        mse_log: mse.log,
        ranknet_log: ranknet.log,
        eval_dataset,
        stage1,
        runs,
        evaluations,
        env,
    };
    Ok((report, artifacts))
}

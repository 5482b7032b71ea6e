use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rerank_core::corpus::{Dataset, DatasetGroup, Qrels};
use rerank_core::exec::Sequential;
use rerank_core::experiment::{Environment, ExperimentSpec};
use rerank_core::features::FEATURE_COUNT;
use rerank_core::model::ScorerParams;
use rerank_core::pipeline::{run_dataset, PipelineConfig};
use rerank_core::rerank::{MlpScorer, OracleScorer, PassthroughScorer};
use rerank_core::retrieval::Retriever;
use rerank_core::synth::SyntheticSpec;

fn environment() -> Environment {
    let mut spec = ExperimentSpec::with_seed(77);
    spec.world = SyntheticSpec {
        docs: 400,
        vocab: 500,
        topics: 8,
        topic_words: 30,
        train_queries: 1,
        eval_queries: 30,
        ..SyntheticSpec::default()
    };
    Environment::build(&spec).unwrap()
}

/// Judgments placed only on documents inside each query's stage-1 top `k0`.
fn dataset_within_depth(env: &Environment, retriever: &dyn Retriever, k0: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut qrels = Qrels::new();
    for q in &env.world.eval_queries {
        let list = retriever.retrieve(q, k0).unwrap();
        for d in list.doc_ids() {
            if rng.random_bool(0.2) {
                qrels.insert(q.query_id.clone(), d, rng.random_range(1..=3));
            }
        }
        let last = list.doc_ids().last().unwrap();
        qrels.insert(q.query_id.clone(), last, 3);
    }
    Dataset::new(
        "fixture",
        DatasetGroup::Other,
        env.world.corpus.clone(),
        env.world.eval_queries.clone(),
        qrels,
    )
    .unwrap()
}

#[test]
fn passthrough_reproduces_stage_one() {
    let env = environment();
    for retriever in env.retrievers() {
        let dataset = dataset_within_depth(&env, retriever, 50);
        let config = PipelineConfig {
            k0: 50,
            k: 50,
            ..PipelineConfig::default()
        };
        let run = run_dataset(&dataset, retriever, &PassthroughScorer, &config, &Sequential).unwrap();
        assert_eq!(run.stage1, run.reranked);
        assert_eq!(run.baseline, run.model);
    }
}

#[test]
fn oracle_is_perfect_when_positives_are_retrieved() {
    let env = environment();
    for retriever in env.retrievers() {
        let dataset = dataset_within_depth(&env, retriever, 100);
        let oracle = OracleScorer::new(dataset.qrels.clone());
        let run = run_dataset(&dataset, retriever, &oracle, &PipelineConfig::default(), &Sequential).unwrap();
        assert_eq!(run.model.evaluated(), dataset.queries.len());
        assert!(run.model.per_query.values().all(|&v| v == 1.0));
        assert_eq!(run.model.mean, 1.0);
        assert!(run.baseline.mean < 1.0);
    }
}

#[test]
fn reranked_lists_are_subsets_of_candidates() {
    let env = environment();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for retriever in env.retrievers() {
        let dataset = dataset_within_depth(&env, retriever, 100);
        for _ in 0..3 {
            let params = ScorerParams::random(FEATURE_COUNT, 8, &mut rng);
            let scorer = MlpScorer::new(params, env.context.clone(), "mlp");
            let config = PipelineConfig {
                k0: rng.random_range(10..=100),
                k: 10,
                ..PipelineConfig::default()
            };
            let run = run_dataset(&dataset, retriever, &scorer, &config, &Sequential).unwrap();
            for (s1, rr) in run.stage1.iter().zip(&run.reranked) {
                let pool: BTreeSet<&str> = s1.doc_ids().collect();
                assert!(rr.doc_ids().all(|d| pool.contains(d)));
                assert_eq!(rr.len(), 10);
                assert!(rr.is_well_formed());
                assert_eq!(rr.source_tag, "mlp");
            }
        }
    }
}

#[test]
fn negated_oracle_never_beats_stage_one() {
    let env = environment();
    for retriever in env.retrievers() {
        let dataset = dataset_within_depth(&env, retriever, 100);
        for (k0, k) in [(100, 100), (100, 10), (30, 10)] {
            let config = PipelineConfig {
                k0,
                k,
                ..PipelineConfig::default()
            };
            let adversary = OracleScorer::adversarial(dataset.qrels.clone());
            let run = run_dataset(&dataset, retriever, &adversary, &config, &Sequential).unwrap();
            for (q, base) in &run.baseline.per_query {
                assert!(run.model.per_query[q] <= base + 1e-12, "{q} k0={k0} k={k}");
            }
            assert!(run.model.mean < run.baseline.mean);
        }
    }
}

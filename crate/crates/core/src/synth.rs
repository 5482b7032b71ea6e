//! Seeded synthetic retrieval world: a topical corpus, query sets generated
//! from target documents, and matching dense embeddings and sparse
//! expansion weights for the three first-stage retrievers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, Query};
use crate::retrieval::{EmbeddingTable, SparseExpansionModel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub docs: usize,
    pub vocab: usize,
    pub topics: usize,
    /// Vocabulary words favoured by each topic.
    pub topic_words: usize,
    pub train_queries: usize,
    pub eval_queries: usize,
    pub dense_dim: usize,
    pub min_doc_len: usize,
    pub max_doc_len: usize,
    pub min_query_len: usize,
    pub max_query_len: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            docs: 10_000,
            vocab: 3_000,
            topics: 50,
            topic_words: 80,
            train_queries: 2_000,
            eval_queries: 500,
            dense_dim: 32,
            min_doc_len: 30,
            max_doc_len: 120,
            min_query_len: 2,
            max_query_len: 6,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.docs == 0 || self.vocab == 0 || self.topics == 0 || self.dense_dim == 0 {
            return Err(Error::Invalid(
                "synthetic corpus needs docs, vocab, topics and dimension > 0".into(),
            ));
        }
        if self.topic_words == 0 || self.topic_words > self.vocab {
            return Err(Error::Invalid("topic_words must be in 1..=vocab".into()));
        }
        if self.min_doc_len == 0 || self.min_doc_len > self.max_doc_len {
            return Err(Error::Invalid("invalid document length range".into()));
        }
        if self.min_query_len == 0 || self.min_query_len > self.max_query_len {
            return Err(Error::Invalid("invalid query length range".into()));
        }
        Ok(())
    }
}

pub struct SyntheticWorld {
    pub corpus: Arc<Corpus>,
    pub train_queries: Vec<Query>,
    pub eval_queries: Vec<Query>,
    pub embeddings: Arc<EmbeddingTable>,
    pub sparse: Arc<SparseExpansionModel>,
}

fn word(i: usize) -> String {
    format!("w{i}")
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, std: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, std).expect("valid std");
    (0..dim).map(|_| normal.sample(rng)).collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    for x in &mut v {
        *x /= norm;
    }
    v
}

fn mix(parts: &[(f64, &[f64])]) -> Vec<f64> {
    let dim = parts[0].1.len();
    (0..dim).map(|i| parts.iter().map(|(w, v)| w * v[i]).sum()).collect()
}

/// Zipf-like rank weights `1 / (r + 1)`.
fn zipf_weights(n: usize) -> Vec<f64> {
    (0..n).map(|r| 1.0 / (r as f64 + 1.0)).collect()
}

struct DocInfo {
    topic: usize,
    tokens: Vec<usize>,
    vector: Vec<f64>,
}

pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticWorld> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = spec.dense_dim;
    let noise_std = 1.0 / libm::sqrt(dim as f64);

    let all_words: Vec<usize> = (0..spec.vocab).collect();
    let topic_cores: Vec<Vec<usize>> = (0..spec.topics)
        .map(|_| all_words.choose_multiple(&mut rng, spec.topic_words).copied().collect())
        .collect();
    let centroids: Vec<Vec<f64>> = (0..spec.topics).map(|_| unit(gaussian(&mut rng, dim, 1.0))).collect();
    let core_pick = WeightedIndex::new(zipf_weights(spec.topic_words)).expect("positive weights");
    let background_pick = WeightedIndex::new(zipf_weights(spec.vocab)).expect("positive weights");

    let mut docs = Vec::with_capacity(spec.docs);
    let mut embeddings = EmbeddingTable::new(dim)?;
    let mut sparse = SparseExpansionModel::new();
    let mut infos = Vec::with_capacity(spec.docs);
    for d in 0..spec.docs {
        let topic = rng.random_range(0..spec.topics);
        let len = rng.random_range(spec.min_doc_len..=spec.max_doc_len);
        let tokens: Vec<usize> = (0..len)
            .map(|_| {
                if rng.random_bool(0.6) {
                    topic_cores[topic][core_pick.sample(&mut rng)]
                } else {
                    background_pick.sample(&mut rng)
                }
            })
            .collect();
        let text = tokens.iter().map(|&t| word(t)).collect::<Vec<_>>().join(" ");
        let id = format!("doc{d:05}");
        let noise = gaussian(&mut rng, dim, noise_std);
        let vector = unit(mix(&[(1.0, &centroids[topic]), (0.6, &noise)]));
        embeddings.insert_normalized(id.clone(), vector.clone())?;

        let mut tf: BTreeMap<usize, u32> = BTreeMap::new();
        for &t in &tokens {
            *tf.entry(t).or_default() += 1;
        }
        let mut weights: BTreeMap<String, f64> = tf
            .iter()
            .map(|(&t, &c)| (word(t), 1.0 + libm::log(f64::from(c))))
            .collect();
        for &t in topic_cores[topic].choose_multiple(&mut rng, 6) {
            weights.entry(word(t)).or_insert_with(|| rng.random_range(0.1..0.5));
        }
        sparse.insert(id.clone(), weights)?;
        docs.push(Document::new(id, None, text));
        infos.push(DocInfo { topic, tokens, vector });
    }

    let mut make_queries = |prefix: &str, n: usize, rng: &mut ChaCha8Rng| -> Result<Vec<Query>> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let target = &infos[rng.random_range(0..infos.len())];
            let len = rng.random_range(spec.min_query_len..=spec.max_query_len);
            let tokens: Vec<usize> = (0..len)
                .map(|_| {
                    if rng.random_bool(0.7) {
                        *target.tokens.choose(rng).expect("non-empty document")
                    } else {
                        topic_cores[target.topic][core_pick.sample(rng)]
                    }
                })
                .collect();
            let id = format!("{prefix}{i:05}");
            let noise = gaussian(rng, dim, noise_std);
            let vector = unit(mix(&[
                (0.7, &target.vector),
                (0.5, &centroids[target.topic]),
                (0.4, &noise),
            ]));
            embeddings.insert_normalized(id.clone(), vector)?;
            let distinct: BTreeSet<usize> = tokens.iter().copied().collect();
            let mut weights: BTreeMap<String, f64> = distinct.iter().map(|&t| (word(t), 1.0)).collect();
            for &t in topic_cores[target.topic].choose_multiple(rng, 4) {
                weights.entry(word(t)).or_insert_with(|| rng.random_range(0.2..0.6));
            }
            sparse.insert(id.clone(), weights)?;
            let text = tokens.iter().map(|&t| word(t)).collect::<Vec<_>>().join(" ");
            out.push(Query::new(id, text));
        }
        Ok(out)
    };
    let train_queries = make_queries("train-q", spec.train_queries, &mut rng)?;
    let eval_queries = make_queries("eval-q", spec.eval_queries, &mut rng)?;

    Ok(SyntheticWorld {
        corpus: Arc::new(Corpus::from_documents(docs)?),
        train_queries,
        eval_queries,
        embeddings: Arc::new(embeddings),
        sparse: Arc::new(sparse),
    })
}

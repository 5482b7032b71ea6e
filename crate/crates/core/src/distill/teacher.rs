use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::Query;
use crate::features::{FeatureContext, FeatureVector, FEATURE_COUNT, RECIPROCAL_RANK};
use crate::model::ScorerParams;
use crate::ranked::RankedList;
use crate::rerank::PairScorer;
use crate::{Error, Result};

/// A pair-scoring function used to label distillation data.
pub trait Teacher: Send + Sync {
    fn tag(&self) -> &str;

    fn score(&self, query: &Query, doc_id: &str) -> Result<f64>;
}

/// Precomputed teacher outputs keyed by (query id, doc id).
#[derive(Debug, Clone, Default)]
pub struct FileTeacher {
    tag: String,
    scores: BTreeMap<(String, String), f64>,
}

impl FileTeacher {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            scores: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>, score: f64) -> Option<f64> {
        self.scores.insert((query_id.into(), doc_id.into()), score)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl Teacher for FileTeacher {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn score(&self, query: &Query, doc_id: &str) -> Result<f64> {
        self.scores
            .get(&(query.query_id.clone(), String::from(doc_id)))
            .copied()
            .ok_or_else(|| Error::missing("teacher score", format!("{}/{doc_id}", query.query_id)))
    }
}

/// Fixed per-feature scales that bring the raw features to roughly unit range.
const FEATURE_SCALE: [f64; FEATURE_COUNT] = [10.0, 1.0, 5.0, 3.0, 1.0, 5.0, 2.0, 1.0];

/// Centre of the teacher's linear component: it rewards lexical and
/// semantic match and mildly penalises long documents.
const LINEAR_PRIOR: [f64; FEATURE_COUNT] = [0.8, 1.5, 0.8, 0.3, 1.0, -0.2, 0.0, 0.0];

/// Synthetic teacher: a seeded random MLP plus a linear term over scaled
/// pair features, followed by a per-query affine calibration
/// `scale_q * core + offset_q`.
///
/// The calibration leaves each query's ordering untouched but makes raw
/// scores incomparable across queries, as with real cross-encoder logits.
/// The first-stage rank feature is ignored so the teacher is a function of
/// the (query, document) pair alone.
pub struct HiddenMlpTeacher {
    params: ScorerParams,
    linear: [f64; FEATURE_COUNT],
    seed: u64,
    context: FeatureContext,
    tag: String,
}

impl HiddenMlpTeacher {
    pub fn new(seed: u64, hidden_dim: usize, context: FeatureContext) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ScorerParams::random(FEATURE_COUNT, hidden_dim, &mut rng);
        let mut linear = LINEAR_PRIOR;
        for w in &mut linear {
            *w *= rng.random_range(0.7..1.3);
        }
        Self {
            params,
            linear,
            seed,
            context,
            tag: format!("hidden-mlp-teacher-{seed}"),
        }
    }

    pub fn params(&self) -> &ScorerParams {
        &self.params
    }

    fn scaled(features: &FeatureVector) -> Vec<f64> {
        features
            .values()
            .iter()
            .zip(FEATURE_SCALE)
            .enumerate()
            .map(|(i, (v, s))| if i == RECIPROCAL_RANK { 0.0 } else { v / s })
            .collect()
    }

    /// Score before the per-query calibration.
    pub fn core_score(&self, features: &FeatureVector) -> Result<f64> {
        let z = Self::scaled(features);
        let linear: f64 = z.iter().zip(&self.linear).map(|(a, b)| a * b).sum();
        Ok(linear + self.params.forward_slice(&z)?)
    }

    /// `(scale, offset)` for a query, derived from the query id and seed.
    pub fn calibration(&self, query_id: &str) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(query_id.as_bytes()) ^ self.seed.rotate_left(17));
        let scale = rng.random_range(0.5..2.0);
        let offset = Normal::new(0.0, 1.0).expect("valid normal").sample(&mut rng);
        (scale, offset)
    }

    fn score_features(&self, query_id: &str, features: &FeatureVector) -> Result<f64> {
        let (scale, offset) = self.calibration(query_id);
        Ok(scale * self.core_score(features)? + offset)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl Teacher for HiddenMlpTeacher {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn score(&self, query: &Query, doc_id: &str) -> Result<f64> {
        let f = self.context.features(query, doc_id, None)?;
        self.score_features(&query.query_id, &f)
    }
}

impl PairScorer for HiddenMlpTeacher {
    fn tag(&self) -> Option<&str> {
        Some(&self.tag)
    }

    fn score_candidates(&self, query: &Query, candidates: &RankedList) -> Result<Vec<f64>> {
        self.context
            .candidate_features(query, candidates)?
            .iter()
            .map(|f| self.score_features(&query.query_id, f))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Document};
    use alloc::sync::Arc;
    use alloc::vec;

    fn context() -> FeatureContext {
        FeatureContext::new(Arc::new(
            Corpus::from_documents(vec![
                Document::new("a", None, "red apple"),
                Document::new("b", None, "green pear and more words"),
            ])
            .unwrap(),
        ))
    }

    #[test]
    fn reproducible_across_instances() {
        let q = Query::new("q1", "red apple");
        let t1 = HiddenMlpTeacher::new(9, 16, context());
        let t2 = HiddenMlpTeacher::new(9, 16, context());
        for d in ["a", "b"] {
            assert_eq!(t1.score(&q, d).unwrap().to_bits(), t2.score(&q, d).unwrap().to_bits());
        }
        let t3 = HiddenMlpTeacher::new(10, 16, context());
        assert_ne!(t1.score(&q, "a").unwrap(), t3.score(&q, "a").unwrap());
    }

    #[test]
    fn rank_feature_is_ignored() {
        let t = HiddenMlpTeacher::new(1, 16, context());
        let q = Query::new("q", "red");
        let list = RankedList::from_scores(
            "q",
            "s",
            vec![
                crate::ranked::RankedEntry::new("b", 5.0),
                crate::ranked::RankedEntry::new("a", 1.0),
            ],
            2,
        )
        .unwrap();
        let via_list = PairScorer::score_candidates(&t, &q, &list).unwrap();
        assert_eq!(via_list[0], t.score(&q, "b").unwrap());
        assert_eq!(via_list[1], t.score(&q, "a").unwrap());
    }

    #[test]
    fn calibration_preserves_order_within_query() {
        let t = HiddenMlpTeacher::new(2, 16, context());
        let (scale, _) = t.calibration("anything");
        assert!(scale > 0.0);
    }

    #[test]
    fn file_teacher_missing_pair() {
        let mut t = FileTeacher::new("f");
        t.insert("q", "a", 0.3);
        assert_eq!(t.score(&Query::new("q", ""), "a").unwrap(), 0.3);
        assert!(t.score(&Query::new("q", ""), "b").is_err());
    }
}

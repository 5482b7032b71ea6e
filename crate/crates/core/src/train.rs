//! Training samples, configuration and the epoch loop shared by the BCE, MSE
//! and RankNet objectives.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Qrels;
use crate::features::FeatureVector;
use crate::loss::{bce_loss_grad, mse_loss_grad, ranknet_loss_grad};
use crate::model::ScorerParams;
use crate::optim::{lr_at, AdamW, AdamWConfig, Schedule};
use crate::ranked::RankedList;
use crate::{Error, Result};

/// Default permutation length for listwise distillation.
pub const DEFAULT_LIST_LENGTH: usize = 20;

/// Hard negatives drawn per positive when building BCE sets.
pub const NEGATIVES_PER_POSITIVE: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryPairSample {
    pub query_id: String,
    pub doc_id: String,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionPairSample {
    pub query_id: String,
    pub doc_id: String,
    pub teacher_score: f64,
}

/// A query and its documents, most relevant first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationSample {
    pub query_id: String,
    pub ordered_doc_ids: Vec<String>,
}

impl PermutationSample {
    pub fn new(query_id: impl Into<String>, ordered_doc_ids: Vec<String>) -> Result<Self> {
        let sample = Self {
            query_id: query_id.into(),
            ordered_doc_ids,
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ordered_doc_ids.len() < 2 {
            return Err(Error::Invalid(format!(
                "permutation for `{}` has {} documents, need at least 2",
                self.query_id,
                self.ordered_doc_ids.len()
            )));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = self.ordered_doc_ids.iter().find(|d| !seen.insert(d.as_str())) {
            return Err(Error::Integrity(format!(
                "permutation for `{}` repeats document `{dup}`",
                self.query_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Bce,
    Mse,
    RankNet,
}

impl LossKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Bce => "bce",
            LossKind::Mse => "mse",
            LossKind::RankNet => "ranknet",
        }
    }
}

impl core::fmt::Display for LossKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bce" => Ok(LossKind::Bce),
            "mse" => Ok(LossKind::Mse),
            "ranknet" => Ok(LossKind::RankNet),
            other => Err(Error::Invalid(format!("unknown loss `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainingSet {
    Bce(Vec<BinaryPairSample>),
    Mse(Vec<RegressionPairSample>),
    RankNet(Vec<PermutationSample>),
}

impl TrainingSet {
    pub fn kind(&self) -> LossKind {
        match self {
            TrainingSet::Bce(_) => LossKind::Bce,
            TrainingSet::Mse(_) => LossKind::Mse,
            TrainingSet::RankNet(_) => LossKind::RankNet,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TrainingSet::Bce(s) => s.len(),
            TrainingSet::Mse(s) => s.len(),
            TrainingSet::RankNet(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TrainingSet::Bce(samples) => {
                if let Some(s) = samples.iter().find(|s| s.label > 1) {
                    return Err(Error::Integrity(format!(
                        "label {} for ({}, {}) is not 0 or 1",
                        s.label, s.query_id, s.doc_id
                    )));
                }
            }
            TrainingSet::Mse(samples) => {
                if let Some(s) = samples.iter().find(|s| !s.teacher_score.is_finite()) {
                    return Err(Error::NonFinite(format!(
                        "teacher score for ({}, {})",
                        s.query_id, s.doc_id
                    )));
                }
            }
            TrainingSet::RankNet(samples) => {
                for s in samples {
                    s.validate()?;
                }
            }
        }
        Ok(())
    }

    fn query_of(&self, i: usize) -> &str {
        match self {
            TrainingSet::Bce(s) => &s[i].query_id,
            TrainingSet::Mse(s) => &s[i].query_id,
            TrainingSet::RankNet(s) => &s[i].query_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub peak_lr: f64,
    pub schedule: Schedule,
    pub seed: u64,
    pub optimizer: AdamWConfig,
}

impl TrainConfig {
    /// 10 epochs, batch 32, peak 1e-5 with linear decay (the pointwise fine-tuning recipe).
    pub fn pointwise() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            peak_lr: 1e-5,
            schedule: Schedule::LinearDecay,
            seed: 0,
            optimizer: AdamWConfig::default(),
        }
    }

    /// 2 epochs, batch 32, constant 5e-5 (the listwise permutation recipe).
    pub fn listwise() -> Self {
        Self {
            epochs: 2,
            batch_size: 32,
            peak_lr: 5e-5,
            schedule: Schedule::Constant,
            seed: 0,
            optimizer: AdamWConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.peak_lr > 0.0 && self.peak_lr.is_finite()) {
            return Err(Error::Invalid(format!(
                "need epochs >= 1, batch_size >= 1, peak_lr > 0 (got {}, {}, {})",
                self.epochs, self.batch_size, self.peak_lr
            )));
        }
        Ok(())
    }

    pub fn lr_at(&self, step: usize, total_steps: usize) -> f64 {
        lr_at(self.peak_lr, self.schedule, step, total_steps)
    }
}

/// Supplies the feature vector of a (query, document) training pair.
pub trait FeatureProvider {
    fn features(&self, query_id: &str, doc_id: &str) -> Result<FeatureVector>;
}

impl FeatureProvider for BTreeMap<(String, String), FeatureVector> {
    fn features(&self, query_id: &str, doc_id: &str) -> Result<FeatureVector> {
        self.get(&(String::from(query_id), String::from(doc_id)))
            .cloned()
            .ok_or_else(|| Error::missing("training pair", format!("{query_id}/{doc_id}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ScorerParams,
    /// One record per optimizer step.
    pub log: Vec<LossRecord>,
    /// Mean per-sample loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

enum Prepared {
    Pointwise(Vec<FeatureVector>),
    Listwise(Vec<Vec<FeatureVector>>),
}

fn prepare(set: &TrainingSet, provider: &dyn FeatureProvider) -> Result<Prepared> {
    Ok(match set {
        TrainingSet::Bce(s) => Prepared::Pointwise(
            s.iter()
                .map(|x| provider.features(&x.query_id, &x.doc_id))
                .collect::<Result<_>>()?,
        ),
        TrainingSet::Mse(s) => Prepared::Pointwise(
            s.iter()
                .map(|x| provider.features(&x.query_id, &x.doc_id))
                .collect::<Result<_>>()?,
        ),
        TrainingSet::RankNet(s) => Prepared::Listwise(
            s.iter()
                .map(|x| {
                    x.ordered_doc_ids
                        .iter()
                        .map(|d| provider.features(&x.query_id, d))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?,
        ),
    })
}

/// Per-sample loss, accumulating `d loss / d params` into `grad`.
fn sample_loss(
    params: &ScorerParams,
    set: &TrainingSet,
    prepared: &Prepared,
    i: usize,
    grad: &mut [f64],
) -> Result<f64> {
    match (set, prepared) {
        (TrainingSet::Bce(s), Prepared::Pointwise(f)) => {
            let score = params.forward(&f[i])?;
            let (loss, d) = bce_loss_grad(score, s[i].label == 1);
            params.accumulate_gradient(core::slice::from_ref(&f[i]), &[d], grad)?;
            Ok(loss)
        }
        (TrainingSet::Mse(s), Prepared::Pointwise(f)) => {
            let score = params.forward(&f[i])?;
            let (loss, d) = mse_loss_grad(score, s[i].teacher_score);
            params.accumulate_gradient(core::slice::from_ref(&f[i]), &[d], grad)?;
            Ok(loss)
        }
        (TrainingSet::RankNet(_), Prepared::Listwise(lists)) => {
            let scores = params.forward_batch(&lists[i])?;
            let (loss, d) = ranknet_loss_grad(&scores)?;
            params.accumulate_gradient(&lists[i], &d, grad)?;
            Ok(loss)
        }
        _ => unreachable!("prepared features always match the set kind"),
    }
}

/// Runs `epochs x ceil(n / batch_size)` AdamW steps of `loss` over `set`.
///
/// Each epoch shuffles sample order with a generator seeded from
/// `config.seed`; gradients are summed in sample order and averaged over the
/// batch, so two runs with the same inputs are bit-identical.
pub fn train(
    initial: ScorerParams,
    set: &TrainingSet,
    loss: LossKind,
    config: &TrainConfig,
    provider: &dyn FeatureProvider,
) -> Result<TrainOutcome> {
    config.validate()?;
    if set.kind() != loss {
        return Err(Error::KindMismatch {
            expected: loss.as_str(),
            found: set.kind().as_str(),
        });
    }
    if set.is_empty() {
        return Err(Error::Empty("training set has no samples".into()));
    }
    set.validate()?;
    let prepared = prepare(set, provider)?;

    let n = set.len();
    let batches_per_epoch = n.div_ceil(config.batch_size);
    let total_steps = config.epochs * batches_per_epoch;
    let mut params = initial;
    let mut optimizer = AdamW::new(config.optimizer, params.as_flat().len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; params.as_flat().len()];
    let mut log = Vec::with_capacity(total_steps);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut step = 0;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_total = 0.0;
            for &i in batch {
                batch_total += sample_loss(&params, set, &prepared, i, &mut grad)?;
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            let batch_loss = batch_total * scale;
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                let ids: Vec<&str> = batch.iter().map(|&i| set.query_of(i)).collect();
                return Err(Error::Diverged {
                    step,
                    batch: ids.join(","),
                });
            }
            let lr = config.lr_at(step, total_steps);
            optimizer.step(params.as_flat_mut(), &grad, lr);
            log.push(LossRecord {
                epoch,
                step,
                lr,
                loss: batch_loss,
            });
            epoch_total += batch_total;
            step += 1;
        }
        epoch_losses.push(epoch_total / n as f64);
    }
    if !params.is_finite() {
        return Err(Error::Diverged {
            step,
            batch: String::from("final parameters"),
        });
    }
    Ok(TrainOutcome {
        params,
        log,
        epoch_losses,
    })
}

/// BCE samples with hard negatives: every positively judged document of a
/// query is a positive, and up to `negatives_per_positive` negatives per
/// positive are drawn (seeded) from that query's first-stage candidates
/// that carry no positive judgment.
pub fn build_bce_samples(
    qrels: &Qrels,
    candidates: &[RankedList],
    negatives_per_positive: usize,
    seed: u64,
) -> Vec<BinaryPairSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for list in candidates {
        let Some(grades) = qrels.grades(&list.query_id) else {
            continue;
        };
        let positives: Vec<&String> = grades.iter().filter(|(_, &g)| g > 0).map(|(d, _)| d).collect();
        if positives.is_empty() {
            continue;
        }
        let pool: Vec<&str> = list
            .doc_ids()
            .filter(|d| grades.get(*d).is_none_or(|&g| g == 0))
            .collect();
        let wanted = (positives.len() * negatives_per_positive).min(pool.len());
        let negatives: Vec<&&str> = pool.choose_multiple(&mut rng, wanted).collect();
        for d in positives {
            out.push(BinaryPairSample {
                query_id: list.query_id.clone(),
                doc_id: d.clone(),
                label: 1,
            });
        }
        for d in negatives {
            out.push(BinaryPairSample {
                query_id: list.query_id.clone(),
                doc_id: String::from(*d),
                label: 0,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranked::RankedEntry;

    fn provider(pairs: &[(&str, &str, [f64; 3])]) -> BTreeMap<(String, String), FeatureVector> {
        pairs
            .iter()
            .map(|(q, d, v)| ((String::from(*q), String::from(*d)), FeatureVector::new(v.to_vec())))
            .collect()
    }

    fn mse_config(lr: f64, epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 1,
            peak_lr: lr,
            schedule: Schedule::Constant,
            seed: 0,
            optimizer: AdamWConfig::default(),
        }
    }

    #[test]
    fn empty_set_is_error() {
        let p = ScorerParams::zeros(3, 4);
        let r = train(
            p,
            &TrainingSet::Mse(vec![]),
            LossKind::Mse,
            &mse_config(1e-2, 1),
            &provider(&[]),
        );
        assert!(matches!(r, Err(Error::Empty(_))));
    }

    #[test]
    fn kind_mismatch_is_error() {
        let p = ScorerParams::zeros(3, 4);
        let set = TrainingSet::Bce(vec![BinaryPairSample {
            query_id: "q".into(),
            doc_id: "d".into(),
            label: 1,
        }]);
        let r = train(p, &set, LossKind::RankNet, &mse_config(1e-2, 1), &provider(&[]));
        assert!(matches!(r, Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn mse_converges_to_teacher_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = ScorerParams::random(3, 4, &mut rng);
        let set = TrainingSet::Mse(vec![RegressionPairSample {
            query_id: "q".into(),
            doc_id: "d".into(),
            teacher_score: 0.8,
        }]);
        let prov = provider(&[("q", "d", [0.5, -0.2, 1.0])]);
        let out = train(p, &set, LossKind::Mse, &mse_config(1e-2, 500), &prov).unwrap();
        assert_eq!(out.log.len(), 500);
        let s = out.params.forward(&prov.features("q", "d").unwrap()).unwrap();
        assert!((s - 0.8).abs() < 0.1, "{s}");
    }

    #[test]
    fn mse_loss_decreases_monotonically_at_small_lr() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = ScorerParams::random(3, 4, &mut rng);
        let set = TrainingSet::Mse(vec![RegressionPairSample {
            query_id: "q".into(),
            doc_id: "d".into(),
            teacher_score: 1.5,
        }]);
        let prov = provider(&[("q", "d", [0.5, -0.2, 1.0])]);
        let out = train(p, &set, LossKind::Mse, &mse_config(1e-3, 200), &prov).unwrap();
        for w in out.log.windows(2) {
            assert!(w[1].loss < w[0].loss, "{:?} -> {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = ScorerParams::random(3, 4, &mut rng);
        let set = TrainingSet::RankNet(vec![
            PermutationSample::new("q", vec!["a".into(), "b".into(), "c".into()]).unwrap(),
            PermutationSample::new("r", vec!["c".into(), "a".into()]).unwrap(),
        ]);
        let prov = provider(&[
            ("q", "a", [1.0, 0.0, 0.2]),
            ("q", "b", [0.5, 0.1, 0.3]),
            ("q", "c", [0.0, 0.7, 0.1]),
            ("r", "a", [0.2, 0.2, 0.2]),
            ("r", "c", [0.9, 0.1, 0.0]),
        ]);
        let cfg = TrainConfig {
            batch_size: 1,
            seed: 11,
            ..TrainConfig::listwise()
        };
        let a = train(p.clone(), &set, LossKind::RankNet, &cfg, &prov).unwrap();
        let b = train(p, &set, LossKind::RankNet, &cfg, &prov).unwrap();
        assert_eq!(a.params.as_flat(), b.params.as_flat());
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn permutation_validation() {
        assert!(PermutationSample::new("q", vec!["a".into()]).is_err());
        assert!(PermutationSample::new("q", vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn hard_negatives_come_from_candidates() {
        let mut qrels = Qrels::new();
        qrels.insert("q", "p", 1);
        qrels.insert("q", "z", 0);
        let list = RankedList::from_scores(
            "q",
            "t",
            ["p", "a", "b", "c", "d", "e", "z"]
                .iter()
                .enumerate()
                .map(|(i, d)| RankedEntry::new(*d, -(i as f64)))
                .collect(),
            10,
        )
        .unwrap();
        let samples = build_bce_samples(&qrels, &[list], NEGATIVES_PER_POSITIVE, 0);
        assert_eq!(samples.len(), 5);
        assert_eq!(samples[0].label, 1);
        assert!(samples[1..].iter().all(|s| s.label == 0 && s.doc_id != "p"));
    }
}

//! NDCG@k evaluation, benchmark aggregation and run comparison.
//!
//! Gains are linear (`grade / log2(rank + 1)`) by default, matching
//! trec_eval; [`Gain::Exponential`] switches to `2^grade - 1`. Queries
//! without any positively judged document are excluded from means.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, DatasetGroup};
use crate::ranked::RankedList;
use crate::{Error, Result};

pub const DEFAULT_CUTOFF: usize = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gain {
    #[default]
    Linear,
    Exponential,
}

impl Gain {
    fn apply(self, grade: u32) -> f64 {
        match self {
            Gain::Linear => f64::from(grade),
            Gain::Exponential => libm::exp2(f64::from(grade)) - 1.0,
        }
    }
}

#[inline]
fn discount(position: usize) -> f64 {
    // position is 0-based; rank = position + 1
    libm::log2(position as f64 + 2.0)
}

pub fn dcg_at_k<S: AsRef<str>>(ranking: &[S], grades: &BTreeMap<String, u32>, k: usize, gain: Gain) -> f64 {
    ranking
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, d)| gain.apply(grades.get(d.as_ref()).copied().unwrap_or(0)) / discount(i))
        .sum()
}

pub fn ideal_dcg_at_k(grades: &BTreeMap<String, u32>, k: usize, gain: Gain) -> f64 {
    let mut sorted: Vec<u32> = grades.values().copied().collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain.apply(g) / discount(i))
        .sum()
}

/// DCG normalised by the ideal DCG. Returns 0 when no judged document has a
/// positive grade.
pub fn ndcg_at_k<S: AsRef<str>>(ranking: &[S], grades: &BTreeMap<String, u32>, k: usize, gain: Gain) -> f64 {
    let ideal = ideal_dcg_at_k(grades, k, gain);
    if ideal <= 0.0 {
        return 0.0;
    }
    dcg_at_k(ranking, grades, k, gain) / ideal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvaluation {
    pub k: usize,
    /// NDCG of every evaluable query.
    pub per_query: BTreeMap<String, f64>,
    pub mean: f64,
}

impl RunEvaluation {
    pub fn evaluated(&self) -> usize {
        self.per_query.len()
    }
}

/// Mean NDCG@k of a run over the dataset's evaluable queries. A judged
/// query missing from the run scores 0; a run for an unknown query is an error.
pub fn evaluate_run(runs: &[RankedList], dataset: &Dataset, k: usize, gain: Gain) -> Result<RunEvaluation> {
    if k == 0 {
        return Err(Error::Invalid("cutoff k must be at least 1".into()));
    }
    let mut by_query: BTreeMap<&str, &RankedList> = BTreeMap::new();
    for run in runs {
        if dataset.query(&run.query_id).is_none() {
            return Err(Error::missing("query", run.query_id.clone()).context(format!("dataset {}", dataset.name)));
        }
        if by_query.insert(run.query_id.as_str(), run).is_some() {
            return Err(Error::Integrity(format!("two rankings for query `{}`", run.query_id)));
        }
    }
    let mut per_query = BTreeMap::new();
    for query in &dataset.queries {
        let Some(grades) = dataset.qrels.grades(&query.query_id) else {
            continue;
        };
        if !grades.values().any(|&g| g > 0) {
            continue;
        }
        let ndcg = match by_query.get(query.query_id.as_str()) {
            Some(run) => {
                let ids: Vec<&str> = run.doc_ids().collect();
                ndcg_at_k(&ids, grades, k, gain)
            }
            None => 0.0,
        };
        per_query.insert(query.query_id.clone(), ndcg);
    }
    let mean = if per_query.is_empty() {
        0.0
    } else {
        per_query.values().sum::<f64>() / per_query.len() as f64
    };
    Ok(RunEvaluation { k, per_query, mean })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub baseline_model: String,
    /// model - baseline, per dataset.
    pub deltas: BTreeMap<String, f64>,
    /// Datasets where the model beats the baseline.
    pub improved: Vec<String>,
    pub group_deltas: BTreeMap<DatasetGroup, f64>,
    pub overall_delta: f64,
    pub overall_improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub per_dataset: BTreeMap<String, f64>,
    pub groups: BTreeMap<String, DatasetGroup>,
    pub per_group: BTreeMap<DatasetGroup, f64>,
    /// Unweighted mean over datasets.
    pub overall: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineComparison>,
}

impl EvalReport {
    pub fn group_improved(&self, group: &DatasetGroup) -> bool {
        self.baseline
            .as_ref()
            .and_then(|b| b.group_deltas.get(group))
            .is_some_and(|&d| d > 0.0)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Per-group and overall unweighted means, plus deltas against `baseline`
/// when given.
pub fn aggregate(
    model: impl Into<String>,
    per_dataset: &BTreeMap<String, f64>,
    groups: &BTreeMap<String, DatasetGroup>,
    baseline: Option<&EvalReport>,
) -> Result<EvalReport> {
    if per_dataset.is_empty() {
        return Err(Error::Empty("no dataset results to aggregate".into()));
    }
    let mut members: BTreeMap<DatasetGroup, Vec<f64>> = BTreeMap::new();
    for (name, &value) in per_dataset {
        let group = groups
            .get(name)
            .ok_or_else(|| Error::missing("dataset group", name.clone()))?;
        members.entry(group.clone()).or_default().push(value);
    }
    let per_group: BTreeMap<DatasetGroup, f64> = members.into_iter().map(|(g, v)| (g, mean(v.into_iter()))).collect();
    let overall = mean(per_dataset.values().copied());
    let used_groups = per_dataset.keys().map(|k| (k.clone(), groups[k].clone())).collect();

    let baseline = match baseline {
        None => None,
        Some(base) => {
            let mut deltas = BTreeMap::new();
            let mut improved = Vec::new();
            for (name, &value) in per_dataset {
                let b = base
                    .per_dataset
                    .get(name)
                    .ok_or_else(|| Error::missing("baseline dataset", name.clone()))?;
                let d = value - b;
                if d > 0.0 {
                    improved.push(name.clone());
                }
                deltas.insert(name.clone(), d);
            }
            let group_deltas = per_group
                .iter()
                .filter_map(|(g, v)| base.per_group.get(g).map(|b| (g.clone(), v - b)))
                .collect();
            Some(BaselineComparison {
                baseline_model: base.model.clone(),
                deltas,
                improved,
                group_deltas,
                overall_delta: overall - base.overall,
                overall_improved: overall > base.overall,
            })
        }
    };
    Ok(EvalReport {
        model: model.into(),
        per_dataset: per_dataset.clone(),
        groups: used_groups,
        per_group,
        overall,
        baseline,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartRow {
    pub dataset: String,
    pub baseline: f64,
    pub model: f64,
    pub delta: f64,
}

/// Per-dataset improvement over the baseline, sorted ascending by delta
/// (ties by dataset name).
pub fn compare_chart_data(model: &EvalReport, baseline: &EvalReport) -> Result<Vec<ChartRow>> {
    if model.per_dataset.len() != baseline.per_dataset.len()
        || model.per_dataset.keys().any(|k| !baseline.per_dataset.contains_key(k))
    {
        return Err(Error::Integrity(format!(
            "reports `{}` and `{}` cover different datasets",
            model.model, baseline.model
        )));
    }
    let mut rows: Vec<ChartRow> = model
        .per_dataset
        .iter()
        .map(|(name, &m)| {
            let b = baseline.per_dataset[name];
            ChartRow {
                dataset: name.clone(),
                baseline: b,
                model: m,
                delta: m - b,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.delta.total_cmp(&b.delta).then_with(|| a.dataset.cmp(&b.dataset)));
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub model_tag: String,
    pub queries_processed: usize,
    pub wall_seconds: f64,
    pub qps: f64,
}

impl ThroughputReport {
    pub fn new(model_tag: impl Into<String>, queries_processed: usize, wall_seconds: f64) -> Result<Self> {
        if !(wall_seconds > 0.0 && wall_seconds.is_finite()) {
            return Err(Error::Invalid(format!(
                "wall time must be positive, got {wall_seconds}"
            )));
        }
        Ok(Self {
            model_tag: model_tag.into(),
            queries_processed,
            wall_seconds,
            qps: queries_processed as f64 / wall_seconds,
        })
    }
}

/// Kendall's tau-b between two score vectors over the same items.
/// Returns 0 when either side is constant.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("{} vs {} scores", a.len(), b.len())));
    }
    let n = a.len();
    let (mut concordant, mut discordant, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let da = a[i].total_cmp(&a[j]) as i64;
            let db = b[i].total_cmp(&b[j]) as i64;
            if da == 0 {
                ties_a += 1;
            }
            if db == 0 {
                ties_b += 1;
            }
            match da * db {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    let pairs = (n * n.saturating_sub(1) / 2) as i64;
    let denom = libm::sqrt(((pairs - ties_a) as f64) * ((pairs - ties_b) as f64));
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((concordant - discordant) as f64 / denom)
}

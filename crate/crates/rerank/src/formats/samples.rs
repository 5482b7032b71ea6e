use std::path::{Path, PathBuf};

use rerank_core::train::{
    BinaryPairSample, LossKind, LossRecord, PermutationSample, RegressionPairSample, TrainingSet,
};
use serde::{Deserialize, Serialize};

use super::{create, csv_error, finish, load_json, open, read_jsonl, save_json, write_jsonl};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum SampleLine {
    Bce(BinaryPairSample),
    Mse(RegressionPairSample),
    Ranknet(PermutationSample),
}

impl SampleLine {
    fn kind(&self) -> LossKind {
        match self {
            SampleLine::Bce(_) => LossKind::Bce,
            SampleLine::Mse(_) => LossKind::Mse,
            SampleLine::Ranknet(_) => LossKind::RankNet,
        }
    }
}

/// Facts about how a training set was built, stored next to it as
/// `<file>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetMetadata {
    pub kind: LossKind,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teacher_tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list_length: Option<usize>,
    /// Queries left out because they had too few candidates.
    #[serde(default)]
    pub skipped_queries: Vec<String>,
}

impl SetMetadata {
    pub fn sidecar_path(samples_path: &Path) -> PathBuf {
        let mut name = samples_path.as_os_str().to_owned();
        name.push(".meta.json");
        PathBuf::from(name)
    }

    pub fn load(samples_path: &Path) -> Result<Option<Self>> {
        let path = Self::sidecar_path(samples_path);
        if path.exists() {
            load_json(&path).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn save(&self, samples_path: &Path) -> Result<()> {
        save_json(&Self::sidecar_path(samples_path), self)
    }
}

/// JSON lines, one sample per line, each tagged with `"kind"`. Every line
/// must have the same kind.
pub fn load_samples(path: impl AsRef<Path>) -> Result<TrainingSet> {
    let path = path.as_ref();
    let lines: Vec<SampleLine> = read_jsonl(open(path)?, path)?;
    let Some(first) = lines.first().map(SampleLine::kind) else {
        return Err(Error::Core(rerank_core::Error::Empty(format!(
            "no training samples in {}",
            path.display()
        ))));
    };
    let mut set = match first {
        LossKind::Bce => TrainingSet::Bce(Vec::new()),
        LossKind::Mse => TrainingSet::Mse(Vec::new()),
        LossKind::RankNet => TrainingSet::RankNet(Vec::new()),
    };
    for (i, line) in lines.into_iter().enumerate() {
        let mismatch = |found: LossKind| {
            Error::Core(rerank_core::Error::KindMismatch {
                expected: first.as_str(),
                found: found.as_str(),
            })
            .context(format!("{}:{}: mixed sample kinds", path.display(), i + 1))
        };
        match (&mut set, line) {
            (TrainingSet::Bce(v), SampleLine::Bce(s)) => v.push(s),
            (TrainingSet::Mse(v), SampleLine::Mse(s)) => v.push(s),
            (TrainingSet::RankNet(v), SampleLine::Ranknet(s)) => v.push(s),
            (_, other) => return Err(mismatch(other.kind())),
        }
    }
    set.validate()
        .map_err(|e| Error::Core(e).context(path.display().to_string()))?;
    Ok(set)
}

pub fn save_samples(path: impl AsRef<Path>, set: &TrainingSet) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    match set {
        TrainingSet::Bce(v) => write_jsonl(&mut w, v.iter().cloned().map(SampleLine::Bce), path)?,
        TrainingSet::Mse(v) => write_jsonl(&mut w, v.iter().cloned().map(SampleLine::Mse), path)?,
        TrainingSet::RankNet(v) => write_jsonl(&mut w, v.iter().cloned().map(SampleLine::Ranknet), path)?,
    }
    finish(path, w)
}

/// CSV with columns `epoch,step,lr,loss`, one row per optimizer step.
pub fn save_loss_log(path: impl AsRef<Path>, log: &[LossRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut wtr = csv::Writer::from_writer(create(path)?);
    for record in log {
        wtr.serialize(record).map_err(|e| csv_error(path, e))?;
    }
    let w = wtr.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    finish(path, w)
}

pub fn load_loss_log(path: impl AsRef<Path>) -> Result<Vec<LossRecord>> {
    let path = path.as_ref();
    csv::Reader::from_reader(open(path)?)
        .deserialize()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect()
}

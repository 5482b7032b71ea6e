use std::path::Path;

use rerank_core::features::FEATURE_NAMES;
use rerank_core::model::ScorerParams;
use serde::{Deserialize, Serialize};

use super::{load_json, save_json};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// A trained scorer as JSON. Weight matrices are row-major with one row per
/// output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub tag: String,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub feature_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: f64,
}

impl Checkpoint {
    pub fn new(tag: impl Into<String>, params: &ScorerParams) -> Self {
        let (w1, b1, w2, b2, w3, b3) = params.parts();
        let feature_names = if params.input_dim() == FEATURE_NAMES.len() {
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
        } else {
            (0..params.input_dim()).map(|i| format!("f{i}")).collect()
        };
        Self {
            format_version: FORMAT_VERSION,
            tag: tag.into(),
            input_dim: params.input_dim(),
            hidden_dim: params.hidden_dim(),
            feature_names,
            loss: None,
            seed: None,
            w1: w1.chunks(params.input_dim()).map(<[f64]>::to_vec).collect(),
            b1: b1.to_vec(),
            w2: w2.chunks(params.hidden_dim()).map(<[f64]>::to_vec).collect(),
            b2: b2.to_vec(),
            w3: w3.to_vec(),
            b3,
        }
    }

    pub fn params(&self) -> Result<ScorerParams> {
        let shape = |what: String| Error::Core(rerank_core::Error::Shape(what)).context("checkpoint");
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Core(rerank_core::Error::Invalid(format!(
                "checkpoint format {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            ))));
        }
        if self.feature_names.len() != self.input_dim {
            return Err(shape(format!(
                "{} feature names for input_dim {}",
                self.feature_names.len(),
                self.input_dim
            )));
        }
        let (f, h) = (self.input_dim, self.hidden_dim);
        let rows_ok = |m: &[Vec<f64>], rows: usize, cols: usize| m.len() == rows && m.iter().all(|r| r.len() == cols);
        if !rows_ok(&self.w1, h, f)
            || !rows_ok(&self.w2, h, h)
            || self.b1.len() != h
            || self.b2.len() != h
            || self.w3.len() != h
        {
            return Err(shape(format!("weights do not match input_dim {f}, hidden_dim {h}")));
        }
        let flat: Vec<f64> = self
            .w1
            .iter()
            .flatten()
            .chain(&self.b1)
            .chain(self.w2.iter().flatten())
            .chain(&self.b2)
            .chain(&self.w3)
            .chain(std::iter::once(&self.b3))
            .copied()
            .collect();
        ScorerParams::from_flat(f, h, flat).map_err(|e| Error::Core(e).context("checkpoint"))
    }
}

/// Loads and validates a checkpoint; the model input must match the
/// feature extractor.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(Checkpoint, ScorerParams)> {
    let path = path.as_ref();
    let ckpt: Checkpoint = load_json(path)?;
    let params = ckpt.params().map_err(|e| e.context(path.display().to_string()))?;
    if ckpt.feature_names.iter().map(String::as_str).ne(FEATURE_NAMES) {
        return Err(Error::Core(rerank_core::Error::Shape(format!(
            "checkpoint features {:?} do not match the extractor's {:?}",
            ckpt.feature_names, FEATURE_NAMES
        )))
        .context(path.display().to_string()));
    }
    Ok((ckpt, params))
}

pub fn save_checkpoint(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    save_json(path.as_ref(), checkpoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rerank_core::features::FEATURE_COUNT;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let params = ScorerParams::random(FEATURE_COUNT, 16, &mut rng);
        let mut ckpt = Checkpoint::new("student", &params);
        ckpt.loss = Some("ranknet".into());
        ckpt.seed = Some(7);
        save_checkpoint(&path, &ckpt).unwrap();
        let (back, restored) = load_checkpoint(&path).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(restored, params);
    }

    #[test]
    fn rejects_bad_shapes() {
        let params = ScorerParams::zeros(FEATURE_COUNT, 4);
        let mut ckpt = Checkpoint::new("m", &params);
        ckpt.w2.pop();
        assert!(ckpt.params().is_err());
        let mut ckpt = Checkpoint::new("m", &params);
        ckpt.format_version = 99;
        assert!(ckpt.params().is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_checkpoint(&path, &Checkpoint::new("m", &ScorerParams::zeros(3, 4))).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}

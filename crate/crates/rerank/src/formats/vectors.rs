use std::path::Path;

use rerank_core::retrieval::{EmbeddingTable, SparseExpansionModel, TermWeights};
use serde::{Deserialize, Serialize};

use super::{create, finish, open, read_jsonl, write_jsonl};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct VectorLine {
    #[serde(rename = "_id")]
    id: String,
    vector: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightsLine {
    #[serde(rename = "_id")]
    id: String,
    weights: TermWeights,
}

/// JSON lines `{"_id": ..., "vector": [...]}`. Every vector must already be
/// unit length and share the first line's dimension.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let lines: Vec<VectorLine> = read_jsonl(open(path)?, path)?;
    let first = lines.first().ok_or_else(|| {
        Error::Core(rerank_core::Error::Empty(format!(
            "no embeddings in {}",
            path.display()
        )))
    })?;
    let mut table =
        EmbeddingTable::new(first.vector.len()).map_err(|e| Error::Core(e).context(path.display().to_string()))?;
    for (i, line) in lines.into_iter().enumerate() {
        table
            .insert(line.id, line.vector)
            .map_err(|e| Error::Core(e).context(format!("{}:{}", path.display(), i + 1)))?;
    }
    Ok(table)
}

pub fn save_embeddings(path: impl AsRef<Path>, table: &EmbeddingTable) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_jsonl(
        &mut w,
        table.iter().map(|(id, v)| VectorLine {
            id: id.to_string(),
            vector: v.to_vec(),
        }),
        path,
    )?;
    finish(path, w)
}

/// JSON lines `{"_id": ..., "weights": {"term": weight, ...}}`.
pub fn load_sparse(path: impl AsRef<Path>) -> Result<SparseExpansionModel> {
    let path = path.as_ref();
    let mut model = SparseExpansionModel::new();
    for (i, line) in read_jsonl::<WeightsLine>(open(path)?, path)?.into_iter().enumerate() {
        model
            .insert(line.id, line.weights)
            .map_err(|e| Error::Core(e).context(format!("{}:{}", path.display(), i + 1)))?;
    }
    Ok(model)
}

pub fn save_sparse(path: impl AsRef<Path>, model: &SparseExpansionModel) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_jsonl(
        &mut w,
        model.iter().map(|(id, weights)| WeightsLine {
            id: id.to_string(),
            weights: weights.clone(),
        }),
        path,
    )?;
    finish(path, w)
}

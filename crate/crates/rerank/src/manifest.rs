//! Benchmark manifests: which datasets to run and how.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rerank_core::corpus::{Corpus, Dataset, DatasetGroup};
use rerank_core::eval::{Gain, DEFAULT_CUTOFF};
use rerank_core::experiment::StageOne;
use rerank_core::pipeline::PipelineConfig;
use rerank_core::retrieval::{EmbeddingTable, SparseExpansionModel};
use serde::Deserialize;

use crate::formats::{load_corpus, load_embeddings, load_qrels, load_queries, load_sparse};
use crate::{Error, Result};

fn default_k0() -> usize {
    PipelineConfig::default().k0
}

fn default_k() -> usize {
    PipelineConfig::default().k
}

fn default_query_cap() -> usize {
    PipelineConfig::default().query_cap
}

fn default_cutoff() -> usize {
    DEFAULT_CUTOFF
}

fn default_retriever() -> StageOne {
    StageOne::Bm25
}

fn default_group() -> String {
    DatasetGroup::Other.to_string()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    #[serde(default = "default_group")]
    pub group: String,
    pub corpus: PathBuf,
    pub queries: PathBuf,
    pub qrels: PathBuf,
    pub embeddings: Option<PathBuf>,
    pub sparse: Option<PathBuf>,
}

/// ```toml
/// retriever = "bm25"   # bm25 | dense | sparse
/// k0 = 100
/// k = 10
///
/// [[dataset]]
/// name = "scifact"
/// group = "BEIR"
/// corpus = "scifact/corpus.jsonl"
/// queries = "scifact/queries.jsonl"
/// qrels = "scifact/qrels/test.tsv"
/// ```
///
/// Relative paths are resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkManifest {
    #[serde(default = "default_retriever")]
    pub retriever: StageOne,
    #[serde(default = "default_k0")]
    pub k0: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_query_cap")]
    pub query_cap: usize,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(rename = "dataset", default)]
    pub datasets: Vec<DatasetEntry>,
}

impl BenchmarkManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Self = toml::from_str(&text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            Error::parse(path, line, e.message().to_string())
        })?;
        if manifest.datasets.is_empty() {
            return Err(Error::Core(rerank_core::Error::Empty(format!(
                "{} lists no [[dataset]] entries",
                path.display()
            ))));
        }
        let base = path.parent().unwrap_or(Path::new(""));
        for d in &mut manifest.datasets {
            for p in [&mut d.corpus, &mut d.queries, &mut d.qrels]
                .into_iter()
                .chain(d.embeddings.as_mut())
                .chain(d.sparse.as_mut())
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(manifest)
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            k0: self.k0,
            k: self.k,
            query_cap: self.query_cap,
            cutoff: self.cutoff,
            gain: Gain::Linear,
        }
    }
}

/// A dataset with the optional precomputed retrieval signals for its ids.
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub embeddings: Option<Arc<EmbeddingTable>>,
    pub sparse: Option<Arc<SparseExpansionModel>>,
}

impl DatasetEntry {
    pub fn load(&self) -> Result<LoadedDataset> {
        let corpus = Corpus::from_documents(load_corpus(&self.corpus)?)
            .map_err(|e| Error::Core(e).context(self.corpus.display().to_string()))?;
        let corpus = Arc::new(corpus);
        let dataset = Dataset::new(
            self.name.as_str(),
            DatasetGroup::from(self.group.as_str()),
            corpus,
            load_queries(&self.queries)?,
            load_qrels(&self.qrels)?,
        )
        .map_err(|e| Error::Core(e).context(format!("dataset {}", self.name)))?;
        Ok(LoadedDataset {
            dataset,
            embeddings: self.embeddings.as_ref().map(load_embeddings).transpose()?.map(Arc::new),
            sparse: self.sparse.as_ref().map(load_sparse).transpose()?.map(Arc::new),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.toml");
        std::fs::write(
            &path,
            "retriever = \"dense\"\nk0 = 50\n\n[[dataset]]\nname = \"a\"\ngroup = \"BEIR\"\n\
             corpus = \"a/c.jsonl\"\nqueries = \"/abs/q.jsonl\"\nqrels = \"a/q.tsv\"\nembeddings = \"a/e.jsonl\"\n",
        )
        .unwrap();
        let m = BenchmarkManifest::load(&path).unwrap();
        assert_eq!(m.retriever, StageOne::Dense);
        assert_eq!((m.k0, m.k, m.cutoff), (50, 10, 10));
        let d = &m.datasets[0];
        assert_eq!(d.corpus, dir.path().join("a/c.jsonl"));
        assert_eq!(d.queries, PathBuf::from("/abs/q.jsonl"));
        assert_eq!(d.embeddings.as_deref(), Some(dir.path().join("a/e.jsonl").as_path()));
        assert_eq!(d.sparse, None);
    }

    #[test]
    fn rejects_unknown_keys_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.toml");
        std::fs::write(&path, "k0 = 5\nretreiver = \"bm25\"\n").unwrap();
        assert!(matches!(BenchmarkManifest::load(&path), Err(Error::Parse { .. })));
        std::fs::write(&path, "k0 = 5\n").unwrap();
        assert!(BenchmarkManifest::load(&path).is_err());
    }
}

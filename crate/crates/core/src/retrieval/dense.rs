//! Exhaustive inner-product search over precomputed unit vectors.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{check_depth, Retriever};
use crate::corpus::{Corpus, Query};
use crate::ranked::RankedList;
use crate::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-6;

/// Unit-normalized embeddings keyed by document or query id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Invalid("embedding dimension must be positive".into()));
        }
        Ok(Self {
            dimension,
            vectors: BTreeMap::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Inserts a vector that must already have unit L2 norm (within 1e-6).
    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dimension {
            return Err(Error::Shape(format!(
                "vector `{id}` has dimension {}, expected {}",
                vector.len(),
                self.dimension
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("vector `{id}`")));
        }
        let norm = libm::sqrt(vector.iter().map(|v| v * v).sum::<f64>());
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Integrity(format!("vector `{id}` has norm {norm}, expected 1")));
        }
        if self.vectors.insert(id.clone(), vector).is_some() {
            return Err(Error::Integrity(format!("duplicate embedding id `{id}`")));
        }
        Ok(())
    }

    /// Scales `vector` to unit length, then inserts it.
    pub fn insert_normalized(&mut self, id: impl Into<String>, mut vector: Vec<f64>) -> Result<()> {
        let norm = libm::sqrt(vector.iter().map(|v| v * v).sum::<f64>());
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Invalid("cannot normalize a zero or non-finite vector".into()));
        }
        for v in &mut vector {
            *v /= norm;
        }
        self.insert(id, vector)
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Inner product of two stored vectors (cosine, since both are unit length).
    pub fn similarity(&self, a: &str, b: &str) -> Option<f64> {
        Some(dot(self.get(a)?, self.get(b)?))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense retriever over the documents of one corpus.
pub struct DenseRetriever {
    table: alloc::sync::Arc<EmbeddingTable>,
    doc_ids: Vec<String>,
    /// Row-major copy of the document vectors, in corpus order.
    matrix: Vec<f64>,
    tag: String,
}

impl DenseRetriever {
    /// Every corpus document must have a vector in `table`.
    pub fn new(table: alloc::sync::Arc<EmbeddingTable>, corpus: &Corpus) -> Result<Self> {
        let dim = table.dimension();
        let mut matrix = Vec::with_capacity(dim * corpus.len());
        let mut doc_ids = Vec::with_capacity(corpus.len());
        for doc in corpus {
            let v = table
                .get(&doc.doc_id)
                .ok_or_else(|| Error::missing("document embedding", doc.doc_id.clone()))?;
            matrix.extend_from_slice(v);
            doc_ids.push(doc.doc_id.clone());
        }
        Ok(Self {
            table,
            doc_ids,
            matrix,
            tag: String::from("dense-cosine"),
        })
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    fn scan(&self, query_id: &str, k0: usize) -> Result<RankedList> {
        check_depth(k0)?;
        let q = self
            .table
            .get(query_id)
            .ok_or_else(|| Error::missing("query embedding", query_id))?;
        let dim = self.table.dimension();
        let scores: Vec<f64> = self.matrix.chunks_exact(dim).map(|v| dot(q, v)).collect();
        Ok(RankedList::from_score_vector(
            query_id,
            &self.tag,
            &self.doc_ids,
            &scores,
            k0,
        ))
    }
}

impl Retriever for DenseRetriever {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn retrieve(&self, query: &Query, k0: usize) -> Result<RankedList> {
        self.scan(&query.query_id, k0)
    }
}

/// Top-`k0` documents by cosine similarity to the stored query vector.
pub fn dense_topk(retriever: &DenseRetriever, query_id: &str, k0: usize) -> Result<RankedList> {
    retriever.scan(query_id, k0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use alloc::sync::Arc;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(vectors: &[(&str, Vec<f64>)], query: Vec<f64>) -> DenseRetriever {
        let mut table = EmbeddingTable::new(query.len()).unwrap();
        let mut docs = Vec::new();
        for (id, v) in vectors {
            table.insert_normalized(*id, v.clone()).unwrap();
            docs.push(Document::new(*id, None, "x"));
        }
        table.insert_normalized("q", query).unwrap();
        DenseRetriever::new(Arc::new(table), &Corpus::from_documents(docs).unwrap()).unwrap()
    }

    #[test]
    fn self_similarity_ranks_first() {
        let r = setup(
            &[("a", vec![1.0, 2.0, 0.0]), ("b", vec![0.0, 0.0, 1.0])],
            vec![1.0, 2.0, 0.0],
        );
        let list = dense_topk(&r, "q", 2).unwrap();
        assert_eq!(list.entries()[0].doc_id, "a");
        assert!((list.entries()[0].score - 1.0).abs() < 1e-6);
        assert_eq!(list.entries()[1].score, 0.0);
    }

    #[test]
    fn missing_query_vector() {
        let r = setup(&[("a", vec![1.0, 0.0])], vec![0.0, 1.0]);
        assert!(matches!(dense_topk(&r, "nope", 1), Err(Error::Missing { .. })));
    }

    #[test]
    fn rejects_unnormalized_vectors() {
        let mut t = EmbeddingTable::new(2).unwrap();
        assert!(t.insert("a", vec![1.0, 1.0]).is_err());
        assert!(t.insert("a", vec![1.0]).is_err());
        assert!(t.insert("a", vec![0.6, 0.8]).is_ok());
    }

    #[test]
    fn matches_brute_force_cosine_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut vecs = Vec::new();
            for i in 0..5 {
                let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                vecs.push((["d0", "d1", "d2", "d3", "d4"][i], v));
            }
            let q: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = setup(&vecs, q);
            // Oracle: cosine from raw components, sorted independently.
            let qn = r.table().get("q").unwrap().to_vec();
            let mut expected: Vec<(String, f64)> = vecs
                .iter()
                .map(|(id, _)| {
                    let v = r.table().get(id).unwrap();
                    let mut s = 0.0;
                    for i in 0..4 {
                        s += qn[i] * v[i];
                    }
                    (String::from(*id), s)
                })
                .collect();
            expected.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let got = dense_topk(&r, "q", 5).unwrap();
            for (e, (id, s)) in got.entries().iter().zip(&expected) {
                assert_eq!(&e.doc_id, id);
                assert!((e.score - s).abs() < 1e-9);
            }
        }
    }
}

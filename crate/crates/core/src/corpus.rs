//! Documents, queries, graded relevance judgments and datasets.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::num::NonZeroUsize;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::text::Tokenizer;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, title: Option<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            title,
            text: text.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.doc_id.is_empty() {
            return Err(Error::Integrity("document with empty id".into()));
        }
        let has_title = self.title.as_deref().is_some_and(|t| !t.is_empty());
        if self.text.is_empty() && !has_title {
            return Err(Error::Integrity(format!(
                "document `{}` has neither text nor title",
                self.doc_id
            )));
        }
        Ok(())
    }

    /// Tokens of the title followed by the body text.
    pub fn tokens<T: Tokenizer + ?Sized>(&self, tokenizer: &T) -> Vec<String> {
        let mut tokens = match &self.title {
            Some(title) => tokenizer.tokenize(title),
            None => Vec::new(),
        };
        tokens.extend(tokenizer.tokenize(&self.text));
        tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub text: String,
}

impl Query {
    pub fn new(query_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            text: text.into(),
        }
    }
}

/// Checks ids are non-empty and unique, keeping file order.
pub fn validate_queries(queries: &[Query]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for q in queries {
        if q.query_id.is_empty() {
            return Err(Error::Integrity("query with empty id".into()));
        }
        if !seen.insert(q.query_id.as_str()) {
            return Err(Error::Integrity(format!("duplicate query id `{}`", q.query_id)));
        }
    }
    Ok(())
}

/// An immutable document collection indexed by id. Ordinals follow insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn from_documents(docs: Vec<Document>) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for (ordinal, doc) in docs.iter().enumerate() {
            doc.validate()?;
            if by_id.insert(doc.doc_id.clone(), ordinal).is_some() {
                return Err(Error::Integrity(format!("duplicate document id `{}`", doc.doc_id)));
            }
        }
        Ok(Self { docs, by_id })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn ordinal(&self, doc_id: &str) -> Option<usize> {
        self.by_id.get(doc_id).copied()
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.by_id.contains_key(doc_id)
    }

    pub fn doc(&self, ordinal: usize) -> &Document {
        &self.docs[ordinal]
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Document;
    type IntoIter = core::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.docs.iter()
    }
}

/// Graded judgments: query id -> doc id -> grade.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a judgment, returning the grade it replaced.
    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>, grade: u32) -> Option<u32> {
        self.judgments
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into(), grade)
    }

    pub fn grades(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(query_id)?.get(doc_id).copied()
    }

    pub fn query_count(&self) -> usize {
        self.judgments.len()
    }

    pub fn judgment_count(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, u32>)> {
        self.judgments.iter().map(|(q, g)| (q.as_str(), g))
    }

    /// True when the query has at least one judged document with grade > 0.
    pub fn has_positive(&self, query_id: &str) -> bool {
        self.grades(query_id)
            .is_some_and(|g| g.values().any(|&grade| grade > 0))
    }
}

/// Benchmark task group. The five named groups are the ones reported in the
/// benchmark tables; anything else is kept as a free-form tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum DatasetGroup {
    PolEval,
    WebDs,
    Beir,
    Maupqa,
    Other,
    Custom(String),
}

impl DatasetGroup {
    pub const NAMED: [DatasetGroup; 5] = [
        DatasetGroup::PolEval,
        DatasetGroup::WebDs,
        DatasetGroup::Beir,
        DatasetGroup::Maupqa,
        DatasetGroup::Other,
    ];

    pub fn as_str(&self) -> &str {
        match self {
            DatasetGroup::PolEval => "PolEval",
            DatasetGroup::WebDs => "WebDS",
            DatasetGroup::Beir => "BEIR",
            DatasetGroup::Maupqa => "MAUPQA",
            DatasetGroup::Other => "Other",
            DatasetGroup::Custom(tag) => tag,
        }
    }
}

impl fmt::Display for DatasetGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<&str> for DatasetGroup {
    fn from(s: &str) -> Self {
        match s.to_ascii_lowercase().as_str() {
            "poleval" => DatasetGroup::PolEval,
            "webds" | "web" | "webdatasets" => DatasetGroup::WebDs,
            "beir" | "beir-pl" => DatasetGroup::Beir,
            "maupqa" => DatasetGroup::Maupqa,
            "other" => DatasetGroup::Other,
            _ => DatasetGroup::Custom(s.to_string()),
        }
    }
}

impl From<String> for DatasetGroup {
    fn from(s: String) -> Self {
        DatasetGroup::from(s.as_str())
    }
}

impl From<DatasetGroup> for String {
    fn from(g: DatasetGroup) -> Self {
        g.as_str().to_string()
    }
}

impl FromStr for DatasetGroup {
    type Err = core::convert::Infallible;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        Ok(DatasetGroup::from(s))
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub group: DatasetGroup,
    pub corpus: Arc<Corpus>,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
}

impl Dataset {
    /// Builds a dataset, rejecting judgments that point at unknown queries or documents.
    pub fn new(
        name: impl Into<String>,
        group: DatasetGroup,
        corpus: Arc<Corpus>,
        queries: Vec<Query>,
        qrels: Qrels,
    ) -> Result<Self> {
        let dataset = Self {
            name: name.into(),
            group,
            corpus,
            queries,
            qrels,
        };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn validate(&self) -> Result<()> {
        validate_queries(&self.queries)?;
        let query_ids: BTreeSet<&str> = self.queries.iter().map(|q| q.query_id.as_str()).collect();
        for (query_id, grades) in self.qrels.iter() {
            if !query_ids.contains(query_id) {
                return Err(Error::Integrity(format!(
                    "{}: judged query `{query_id}` is not in the query set",
                    self.name
                )));
            }
            for doc_id in grades.keys() {
                if !self.corpus.contains(doc_id) {
                    return Err(Error::Integrity(format!(
                        "{}: judged document `{doc_id}` (query `{query_id}`) is not in the corpus",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn query(&self, query_id: &str) -> Option<&Query> {
        self.queries.iter().find(|q| q.query_id == query_id)
    }

    /// Keeps the first `limit` queries in file order. Judgments are untouched.
    pub fn cap_queries(&self, limit: NonZeroUsize) -> Dataset {
        let n = self.queries.len().min(limit.get());
        Dataset {
            name: self.name.clone(),
            group: self.group.clone(),
            corpus: Arc::clone(&self.corpus),
            queries: self.queries[..n].to_vec(),
            qrels: self.qrels.clone(),
        }
    }
}

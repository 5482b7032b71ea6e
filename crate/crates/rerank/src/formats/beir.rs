use std::io::{BufRead, Write};
use std::path::Path;

use rerank_core::corpus::{Document, Query};
use serde::{Deserialize, Serialize};

use super::{create, finish, open, read_jsonl, write_jsonl};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct DocLine {
    #[serde(rename = "_id")]
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    title: Option<String>,
    #[serde(default)]
    text: String,
}

#[derive(Serialize, Deserialize)]
struct QueryLine {
    #[serde(rename = "_id")]
    id: String,
    text: String,
}

/// Documents in file order. Ids must be unique; each document must pass
/// [`Document::validate`].
pub fn read_corpus(reader: impl BufRead, path: &Path) -> Result<Vec<Document>> {
    let lines: Vec<DocLine> = read_jsonl(reader, path)?;
    let mut seen = std::collections::HashSet::with_capacity(lines.len());
    let mut docs = Vec::with_capacity(lines.len());
    for (i, line) in lines.into_iter().enumerate() {
        if !seen.insert(line.id.clone()) {
            return Err(Error::Core(rerank_core::Error::Integrity(format!(
                "duplicate document id `{}`",
                line.id
            )))
            .context(format!("{} (document {})", path.display(), i + 1)));
        }
        let title = line.title.filter(|t| !t.is_empty());
        let doc = Document::new(line.id, title, line.text);
        doc.validate()?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    read_corpus(open(path)?, path)
}

pub fn write_corpus<'a>(w: impl Write, docs: impl IntoIterator<Item = &'a Document>, path: &Path) -> Result<()> {
    write_jsonl(
        w,
        docs.into_iter().map(|d| DocLine {
            id: d.doc_id.clone(),
            title: d.title.clone(),
            text: d.text.clone(),
        }),
        path,
    )
}

pub fn save_corpus<'a>(path: impl AsRef<Path>, docs: impl IntoIterator<Item = &'a Document>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_corpus(&mut w, docs, path)?;
    finish(path, w)
}

pub fn read_queries(reader: impl BufRead, path: &Path) -> Result<Vec<Query>> {
    let queries: Vec<Query> = read_jsonl::<QueryLine>(reader, path)?
        .into_iter()
        .map(|q| Query::new(q.id, q.text))
        .collect();
    rerank_core::corpus::validate_queries(&queries).map_err(|e| Error::Core(e).context(path.display().to_string()))?;
    Ok(queries)
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    let path = path.as_ref();
    read_queries(open(path)?, path)
}

pub fn write_queries<'a>(w: impl Write, queries: impl IntoIterator<Item = &'a Query>, path: &Path) -> Result<()> {
    write_jsonl(
        w,
        queries.into_iter().map(|q| QueryLine {
            id: q.query_id.clone(),
            text: q.text.clone(),
        }),
        path,
    )
}

pub fn save_queries<'a>(path: impl AsRef<Path>, queries: impl IntoIterator<Item = &'a Query>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_queries(&mut w, queries, path)?;
    finish(path, w)
}

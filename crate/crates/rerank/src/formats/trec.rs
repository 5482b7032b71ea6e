use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rerank_core::ranked::{RankedEntry, RankedList};

use super::{create, finish, open};
use crate::{Error, Result};

fn check_token(kind: &str, value: &str, path: &Path) -> Result<()> {
    if value.is_empty() || value.chars().any(char::is_whitespace) {
        return Err(Error::Core(rerank_core::Error::Invalid(format!(
            "{kind} `{value}` cannot be written to a TREC run (empty or contains whitespace)"
        )))
        .context(path.display().to_string()));
    }
    Ok(())
}

/// `query_id Q0 doc_id rank score tag`, ranks from 1. Scores use the
/// shortest decimal form that parses back to the same `f64`.
pub fn write_run<'a>(mut w: impl Write, lists: impl IntoIterator<Item = &'a RankedList>, path: &Path) -> Result<()> {
    for list in lists {
        check_token("query id", &list.query_id, path)?;
        check_token("run tag", &list.source_tag, path)?;
        for (i, e) in list.entries().iter().enumerate() {
            check_token("document id", &e.doc_id, path)?;
            writeln!(
                w,
                "{} Q0 {} {} {} {}",
                list.query_id,
                e.doc_id,
                i + 1,
                e.score,
                list.source_tag
            )
            .map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(())
}

pub fn save_run<'a>(path: impl AsRef<Path>, lists: impl IntoIterator<Item = &'a RankedList>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_run(&mut w, lists, path)?;
    finish(path, w)
}

struct Pending {
    tag: String,
    rows: Vec<(usize, RankedEntry)>,
}

/// One list per query, in order of first appearance. Entries are ordered by
/// score (ties by doc id), the same order the writer produces.
pub fn read_run(reader: impl BufRead, path: &Path) -> Result<Vec<RankedList>> {
    let mut order: Vec<String> = Vec::new();
    let mut by_query: HashMap<String, Pending> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 6 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let rank: usize = fields[3]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad rank `{}`", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| Error::parse(path, lineno, format!("bad score `{}`", fields[4])))?;
        let pending = by_query.entry(fields[0].to_string()).or_insert_with(|| {
            order.push(fields[0].to_string());
            Pending {
                tag: fields[5].to_string(),
                rows: Vec::new(),
            }
        });
        pending.rows.push((rank, RankedEntry::new(fields[2], score)));
    }
    order
        .into_iter()
        .map(|q| {
            let mut pending = by_query.remove(&q).expect("every listed query has rows");
            pending.rows.sort_by_key(|(rank, _)| *rank);
            let by_rank: Vec<&str> = pending.rows.iter().map(|(_, e)| e.doc_id.as_str()).collect();
            let n = pending.rows.len();
            let list = RankedList::from_scores(
                q.as_str(),
                pending.tag.as_str(),
                pending.rows.iter().map(|(_, e)| e.clone()).collect(),
                n,
            )
            .map_err(|e| Error::Core(e).context(format!("{} (query {q})", path.display())))?;
            if !list.doc_ids().eq(by_rank.iter().copied()) {
                log::warn!(
                    "{}: ranks of query {q} disagree with scores; using score order",
                    path.display()
                );
            }
            Ok(list)
        })
        .collect()
}

pub fn load_run(path: impl AsRef<Path>) -> Result<Vec<RankedList>> {
    let path = path.as_ref();
    read_run(open(path)?, path)
}

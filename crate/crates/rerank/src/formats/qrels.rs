use std::io::{BufRead, Write};
use std::path::Path;

use rerank_core::corpus::Qrels;

use super::{create, csv_error, finish, open, tsv_reader, tsv_writer};
use crate::{Error, Result};

pub const QRELS_HEADER: [&str; 3] = ["query-id", "corpus-id", "score"];

/// Reads a BEIR qrels TSV (`query-id`, `corpus-id`, `score` after a header
/// line). A repeated (query, document) pair keeps the last grade.
pub fn read_qrels(reader: impl BufRead, path: &Path) -> Result<Qrels> {
    let mut rdr = tsv_reader(reader, true);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 3 {
        return Err(Error::parse(
            path,
            1,
            "expected header `query-id<TAB>corpus-id<TAB>score`",
        ));
    }
    let mut qrels = Qrels::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(Error::parse(
                path,
                line,
                format!("expected 3 columns, found {}", record.len()),
            ));
        }
        let (q, d, raw) = (&record[0], &record[1], record[2].trim());
        let grade: i64 = raw
            .parse()
            .map_err(|_| Error::parse(path, line, format!("grade `{raw}` is not an integer")))?;
        if grade < 0 {
            return Err(Error::Core(rerank_core::Error::Integrity(format!(
                "negative grade {grade} for ({q}, {d})"
            )))
            .context(format!("{}:{line}", path.display())));
        }
        let grade =
            u32::try_from(grade).map_err(|_| Error::parse(path, line, format!("grade {grade} out of range")))?;
        if let Some(previous) = qrels.insert(q, d, grade) {
            log::warn!(
                "{}:{line}: duplicate judgment ({q}, {d}); grade {previous} replaced by {grade}",
                path.display()
            );
        }
    }
    Ok(qrels)
}

pub fn load_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    read_qrels(open(path)?, path)
}

/// Judgments sorted by query id then document id.
pub fn write_qrels(w: impl Write, qrels: &Qrels, path: &Path) -> Result<()> {
    let mut wtr = tsv_writer(w);
    wtr.write_record(QRELS_HEADER).map_err(|e| csv_error(path, e))?;
    for (q, grades) in qrels.iter() {
        for (d, g) in grades {
            wtr.write_record([q, d.as_str(), &g.to_string()])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

pub fn save_qrels(path: impl AsRef<Path>, qrels: &Qrels) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_qrels(&mut w, qrels, path)?;
    finish(path, w)
}

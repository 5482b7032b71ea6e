use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rerank_core::distill::{QueryScores, TeacherScores};

use super::{create, csv_error, finish, open, tsv_reader, tsv_writer};
use crate::{Error, Result};

/// Headerless TSV `query_id<TAB>doc_id<TAB>score`, queries in first-seen order.
pub fn load_teacher_scores(path: impl AsRef<Path>, teacher_tag: &str) -> Result<TeacherScores> {
    let path = path.as_ref();
    let mut rdr = tsv_reader(open(path)?, false);
    let mut out = TeacherScores::new(teacher_tag);
    let mut slot: HashMap<String, usize> = HashMap::new();
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
        let score: f64 = record[2]
            .trim()
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| Error::parse(path, line, format!("bad score `{}`", &record[2])))?;
        let i = *slot.entry(record[0].to_string()).or_insert_with(|| {
            out.queries.push(QueryScores {
                query_id: record[0].to_string(),
                scores: BTreeMap::new(),
            });
            out.queries.len() - 1
        });
        if out.queries[i].scores.insert(record[1].to_string(), score).is_some() {
            return Err(Error::Core(rerank_core::Error::Integrity(format!(
                "duplicate teacher score for ({}, {})",
                &record[0], &record[1]
            )))
            .context(format!("{}:{line}", path.display())));
        }
    }
    Ok(out)
}

pub fn save_teacher_scores(path: impl AsRef<Path>, scores: &TeacherScores) -> Result<()> {
    let path = path.as_ref();
    let mut wtr = tsv_writer(create(path)?);
    for q in &scores.queries {
        for (d, s) in &q.scores {
            wtr.write_record([q.query_id.as_str(), d.as_str(), &s.to_string()])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    let w = wtr.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    finish(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_query_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        let mut scores = TeacherScores::new("t");
        for (q, docs) in [("q9", &[("b", 0.1 + 0.2), ("a", -1.5)][..]), ("q1", &[("c", 3e-9)][..])] {
            scores.queries.push(QueryScores {
                query_id: q.into(),
                scores: docs.iter().map(|(d, s)| (d.to_string(), *s)).collect(),
            });
        }
        save_teacher_scores(&path, &scores).unwrap();
        assert_eq!(load_teacher_scores(&path, "t").unwrap(), scores);
    }

    #[test]
    fn rejects_duplicates_and_bad_scores() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        std::fs::write(&path, "q\td\t1\nq\td\t2\n").unwrap();
        assert!(load_teacher_scores(&path, "t").is_err());
        std::fs::write(&path, "q\td\tNaN\n").unwrap();
        assert!(matches!(
            load_teacher_scores(&path, "t"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}

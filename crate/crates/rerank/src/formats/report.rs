use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rerank_core::corpus::DatasetGroup;
use rerank_core::eval::{ChartRow, EvalReport};
use serde::Deserialize;

use super::{create, csv_error, finish, load_json, open, save_json, tsv_reader};
use crate::{Error, Result};

pub fn load_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    load_json(path.as_ref())
}

pub fn save_report(path: impl AsRef<Path>, report: &EvalReport) -> Result<()> {
    save_json(path.as_ref(), report)
}

/// Per-dataset scores with their group, as read from a
/// `dataset<TAB>group<TAB>ndcg` table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    pub per_dataset: BTreeMap<String, f64>,
    pub groups: BTreeMap<String, DatasetGroup>,
}

#[derive(Deserialize)]
struct ScoreRow {
    dataset: String,
    group: String,
    ndcg: f64,
}

pub fn load_score_table(path: impl AsRef<Path>) -> Result<ScoreTable> {
    let path = path.as_ref();
    let mut rdr = tsv_reader(open(path)?, true);
    let mut table = ScoreTable::default();
    for row in rdr.deserialize::<ScoreRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        if !row.ndcg.is_finite() {
            return Err(
                Error::Core(rerank_core::Error::NonFinite(format!("score of {}", row.dataset)))
                    .context(path.display().to_string()),
            );
        }
        if table.per_dataset.insert(row.dataset.clone(), row.ndcg).is_some() {
            return Err(Error::Core(rerank_core::Error::Integrity(format!(
                "duplicate dataset `{}`",
                row.dataset
            )))
            .context(path.display().to_string()));
        }
        table.groups.insert(row.dataset, DatasetGroup::from(row.group));
    }
    Ok(table)
}

fn column_groups<'a>(reports: impl Iterator<Item = &'a EvalReport>) -> Vec<DatasetGroup> {
    let mut seen: Vec<DatasetGroup> = Vec::new();
    for r in reports {
        for g in r.per_group.keys() {
            if !seen.contains(g) {
                seen.push(g.clone());
            }
        }
    }
    let named = DatasetGroup::NAMED.iter().filter(|g| seen.contains(g)).cloned();
    let mut custom: Vec<DatasetGroup> = seen
        .iter()
        .filter(|g| matches!(g, DatasetGroup::Custom(_)))
        .cloned()
        .collect();
    custom.sort();
    named.chain(custom).collect()
}

/// Plain-text table with one row per report: overall average then one
/// column per dataset group. Reports compared against a baseline get an
/// extra row of deltas.
pub fn render_table(reports: &[&EvalReport]) -> String {
    let groups = column_groups(reports.iter().copied());
    let mut header = vec!["Model".to_string(), "Average".to_string()];
    header.extend(groups.iter().map(|g| g.to_string()));
    let mut rows = vec![header];
    for r in reports {
        let mut row = vec![r.model.clone(), format!("{:.4}", r.overall)];
        row.extend(
            groups
                .iter()
                .map(|g| r.per_group.get(g).map_or("-".into(), |v| format!("{v:.4}"))),
        );
        rows.push(row);
        if let Some(b) = &r.baseline {
            let mut row = vec![format!("  vs {}", b.baseline_model), format!("{:+.4}", b.overall_delta)];
            row.extend(
                groups
                    .iter()
                    .map(|g| b.group_deltas.get(g).map_or("-".into(), |v| format!("{v:+.4}"))),
            );
            rows.push(row);
        }
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    out
}

/// `dataset,baseline,model,delta` rows in the given order.
pub fn write_chart_csv(w: impl Write, rows: &[ChartRow], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

pub fn save_chart_csv(path: impl AsRef<Path>, rows: &[ChartRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_chart_csv(&mut w, rows, path)?;
    finish(path, w)
}

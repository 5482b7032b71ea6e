//! Single-threaded reranking throughput.

use std::path::Path;
use std::time::Instant;

use rerank_core::corpus::{Corpus, Query};
use rerank_core::eval::ThroughputReport;
use rerank_core::ranked::RankedList;
use rerank_core::rerank::{rerank, PairScorer, RerankRequest};
use serde::Deserialize;

use crate::formats::{csv_error, open, tsv_reader};
use crate::{Error, Result};

/// Reranks the first `m` candidates of every query on the calling thread and
/// times only the reranking calls. `candidates[i]` belongs to `queries[i]`.
pub fn measure_throughput<S: PairScorer + ?Sized>(
    scorer: &S,
    corpus: &Corpus,
    queries: &[Query],
    candidates: &[RankedList],
    m: usize,
    model_tag: &str,
) -> Result<ThroughputReport> {
    if queries.len() != candidates.len() {
        return Err(Error::Core(rerank_core::Error::Shape(format!(
            "{} queries but {} candidate lists",
            queries.len(),
            candidates.len()
        ))));
    }
    if queries.is_empty() || m == 0 {
        return Err(Error::Core(rerank_core::Error::Empty("nothing to rerank".into())));
    }
    let truncated: Vec<RankedList> = candidates.iter().map(|c| c.truncated(m)).collect();
    let start = Instant::now();
    for (query, list) in queries.iter().zip(&truncated) {
        let out = rerank(
            scorer,
            &RerankRequest {
                query,
                candidates: list,
                k: m,
            },
            corpus,
        )?;
        std::hint::black_box(out);
    }
    let wall = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    Ok(ThroughputReport::new(model_tag, queries.len(), wall)?)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReferenceThroughput {
    pub model: String,
    pub qps: f64,
}

/// `model<TAB>qps` with a header line.
pub fn load_reference_throughput(path: impl AsRef<Path>) -> Result<Vec<ReferenceThroughput>> {
    let path = path.as_ref();
    let rows: Vec<ReferenceThroughput> = tsv_reader(open(path)?, true)
        .deserialize()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect::<Result<_>>()?;
    if let Some(bad) = rows.iter().find(|r| !(r.qps > 0.0 && r.qps.is_finite())) {
        return Err(Error::Core(rerank_core::Error::Invalid(format!(
            "reference qps for {} must be positive, got {}",
            bad.model, bad.qps
        )))
        .context(path.display().to_string()));
    }
    Ok(rows)
}

/// Measured and reference rows, fastest first, with each model's speed
/// relative to the slowest.
pub fn render_throughput(measured: &[ThroughputReport], reference: &[ReferenceThroughput]) -> String {
    let mut rows: Vec<(&str, f64, &str)> = measured
        .iter()
        .map(|r| (r.model_tag.as_str(), r.qps, "measured"))
        .chain(reference.iter().map(|r| (r.model.as_str(), r.qps, "reference")))
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let slowest = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let name_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<name_w$}  {:>12}  {:>9}  source\n", "model", "queries/s", "relative");
    for (model, qps, source) in rows {
        out.push_str(&format!(
            "{model:<name_w$}  {qps:>12.3}  {:>8.1}x  {source}\n",
            qps / slowest
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_orders_by_speed() {
        let measured = vec![ThroughputReport::new("mine", 10, 2.0).unwrap()];
        let reference = vec![
            ReferenceThroughput {
                model: "big".into(),
                qps: 0.5,
            },
            ReferenceThroughput {
                model: "small".into(),
                qps: 50.0,
            },
        ];
        let text = render_throughput(&measured, &reference);
        let models: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|l| l.split_whitespace().next().unwrap())
            .collect();
        assert_eq!(models, ["small", "mine", "big"]);
        assert!(text.lines().nth(2).unwrap().contains("10.0x"));
    }
}

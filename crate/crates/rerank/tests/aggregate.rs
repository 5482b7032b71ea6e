mod common;

use common::{fixture, ok, s};
use rerank::core::corpus::DatasetGroup;
use rerank::formats::load_report;

// Means worked out by hand from the two fixture tables.
const BASELINE_OVERALL: f64 = 0.585_282_926_829_268_3;
const MODEL_OVERALL: f64 = 0.626_519_512_195_122;
const GROUP_MEANS: [(&str, usize, f64, f64); 5] = [
    ("PolEval", 7, 0.6272, 0.7077),
    ("WebDS", 9, 0.6743, 0.7381),
    ("BEIR", 11, 0.5319, 0.5405),
    ("MAUPQA", 12, 0.5008, 0.5354),
    ("Other", 2, 0.8385, 0.8601),
];

#[test]
fn forty_one_dataset_report() {
    let dir = tempfile::tempdir().unwrap();
    let (base, model) = (fixture("aggregate_baseline.tsv"), fixture("aggregate_model.tsv"));
    let (out, chart) = (dir.path().join("report.json"), dir.path().join("chart.csv"));
    let stdout = ok(&[
        "report",
        "--baseline",
        s(&base),
        "--model",
        s(&model),
        "--out",
        s(&out),
        "--chart",
        s(&chart),
    ]);
    assert!(
        stdout.contains("30 of 41 datasets improved; overall +0.0412"),
        "{stdout}"
    );
    for group in GROUP_MEANS.iter().map(|g| g.0) {
        assert!(stdout.lines().next().unwrap().contains(group));
    }

    let report = load_report(&out).unwrap();
    assert_eq!(report.per_dataset.len(), 41);
    assert!((report.overall - MODEL_OVERALL).abs() < 1e-12);
    let cmp = report.baseline.as_ref().unwrap();
    assert!((cmp.overall_delta - (MODEL_OVERALL - BASELINE_OVERALL)).abs() < 1e-12);
    assert!(cmp.overall_improved);
    assert_eq!(cmp.improved.len(), 30);
    assert_eq!(cmp.deltas.values().filter(|d| **d < 0.0).count(), 11);
    for (name, size, b, m) in GROUP_MEANS {
        let group = DatasetGroup::from(name);
        assert_eq!(report.groups.values().filter(|g| **g == group).count(), size, "{name}");
        assert!((report.per_group[&group] - m).abs() < 1e-12, "{name}");
        assert!((cmp.group_deltas[&group] - (m - b)).abs() < 1e-12, "{name}");
        assert!(report.group_improved(&group));
    }

    let mut rdr = csv::Reader::from_path(&chart).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["dataset", "baseline", "model", "delta"]);
    let rows: Vec<(String, f64, f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 41);
    assert!(rows.windows(2).all(|w| w[0].3 <= w[1].3));
    assert_eq!(rows[0].0, "beir-11");
    assert!((rows[0].3 + 0.1014).abs() < 1e-12);
    assert_eq!(rows[40].0, "maupqa-01");
    assert!((rows[40].3 - 0.1556).abs() < 1e-12);
    for (_, b, m, d) in &rows {
        assert_eq!(*d, m - b);
    }
}

mod common;

use std::fs;
use std::path::Path;

use common::{code, fixture, ok, rerank, s, small_experiment};
use rerank::core::eval::EvalReport;
use rerank::core::experiment::{ExperimentReport, RANKNET_SYSTEM};

fn report(path: &Path) -> ExperimentReport {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn chained_stages_match_the_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let xp = dir.path().join("xp");
    small_experiment(&xp, 11, 0);
    let p = |n: &str| xp.join(n);
    let run = dir.path().join("stage1.run");
    let reranked = dir.path().join("reranked.run");
    let eval = dir.path().join("eval.json");
    ok(&[
        "retrieve",
        "--corpus",
        s(&p("corpus.jsonl")),
        "--queries",
        s(&p("eval-queries.jsonl")),
        "--embeddings",
        s(&p("embeddings.jsonl")),
        "--retriever",
        "dense",
        "--k0",
        "100",
        "--out",
        s(&run),
    ]);
    ok(&[
        "rerank",
        "--corpus",
        s(&p("corpus.jsonl")),
        "--queries",
        s(&p("eval-queries.jsonl")),
        "--embeddings",
        s(&p("embeddings.jsonl")),
        "--sparse",
        s(&p("sparse.jsonl")),
        "--run",
        s(&run),
        "--checkpoint",
        s(&p("student-ranknet.json")),
        "--k",
        "10",
        "--out",
        s(&reranked),
    ]);
    ok(&[
        "eval",
        "--run",
        s(&reranked),
        "--qrels",
        s(&p("qrels.tsv")),
        "--queries",
        s(&p("eval-queries.jsonl")),
        "--corpus",
        s(&p("corpus.jsonl")),
        "--out",
        s(&eval),
    ]);
    let chained: EvalReport = serde_json::from_str(&fs::read_to_string(&eval).unwrap()).unwrap();
    let single = report(&p("report.json")).system(RANKNET_SYSTEM).unwrap().ndcg;
    assert!(
        (chained.overall - single).abs() < 1e-9,
        "{} vs {single}",
        chained.overall
    );
    assert_eq!(fs::read(&run).unwrap(), fs::read(p("stage1.run")).unwrap());
}

#[test]
fn passthrough_rerank_reproduces_the_run_file() {
    let dir = tempfile::tempdir().unwrap();
    let xp = dir.path().join("xp");
    small_experiment(&xp, 12, 0);
    let p = |n: &str| xp.join(n);
    for retriever in ["bm25", "dense", "sparse"] {
        let run = dir.path().join(format!("{retriever}.run"));
        let out = dir.path().join(format!("{retriever}.pass.run"));
        ok(&[
            "retrieve",
            "--corpus",
            s(&p("corpus.jsonl")),
            "--queries",
            s(&p("eval-queries.jsonl")),
            "--embeddings",
            s(&p("embeddings.jsonl")),
            "--sparse",
            s(&p("sparse.jsonl")),
            "--retriever",
            retriever,
            "--k0",
            "50",
            "--out",
            s(&run),
        ]);
        ok(&[
            "rerank",
            "--corpus",
            s(&p("corpus.jsonl")),
            "--queries",
            s(&p("eval-queries.jsonl")),
            "--run",
            s(&run),
            "--passthrough",
            "--k",
            "50",
            "--out",
            s(&out),
        ]);
        assert_eq!(fs::read(&run).unwrap(), fs::read(&out).unwrap(), "{retriever}");
    }
}

#[test]
fn ranknet_training_on_bce_samples_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("bce.jsonl");
    fs::write(
        &samples,
        "{\"kind\":\"bce\",\"query_id\":\"q1\",\"doc_id\":\"d1\",\"label\":1}\n",
    )
    .unwrap();
    let out = rerank(&[
        "train",
        "--samples",
        s(&samples),
        "--loss",
        "ranknet",
        "--corpus",
        "unused.jsonl",
        "--queries",
        "unused.jsonl",
        "--out",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ranknet") && err.contains("bce"), "{err}");
    assert!(!dir.path().join("m.json").exists());
}

#[test]
fn eval_prints_a_table_and_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let stdout = ok(&[
        "eval",
        "--run",
        s(&fixture("fixture.run")),
        "--qrels",
        s(&fixture("fixture-qrels.tsv")),
        "--name",
        "fixture",
        "--group",
        "BEIR",
        "--out",
        s(&out_path),
    ]);
    assert!(
        stdout.contains("Model") && stdout.contains("Average") && stdout.contains("BEIR"),
        "{stdout}"
    );
    let report: EvalReport = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    // q1 ranks grades [1, 0, 2] against the ideal [2, 1]; q2 is perfect.
    let q1 = (1.0 + 2.0 / 4f64.log2()) / (2.0 + 1.0 / 3f64.log2());
    assert!((report.overall - (q1 + 1.0) / 2.0).abs() < 1e-12, "{}", report.overall);
    assert_eq!(report.model, "fixture-run");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&rerank(&["eval", "--qrels", "q.tsv"])), 1);
    assert_eq!(code(&rerank(&["eval", "--run", "r", "--qrels", "q", "--bogus"])), 1);
    assert_eq!(code(&rerank(&["no-such-command"])), 1);
    assert_eq!(
        code(&rerank(&[
            "rerank",
            "--corpus",
            "c",
            "--queries",
            "q",
            "--run",
            "r",
            "--out",
            "o"
        ])),
        1
    );
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, "not_a_flag = 3\n").unwrap();
    let out = rerank(&["--config", s(&config), "eval", "--run", "r", "--qrels", "q"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_a_flag"));
}

#[test]
fn missing_input_files_are_data_errors() {
    let out = rerank(&["eval", "--run", "/nonexistent/run", "--qrels", "/nonexistent/qrels"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn help_lists_every_flag() {
    let top = ok(&["--help"]);
    for sub in [
        "index",
        "retrieve",
        "mine",
        "teacher-score",
        "build-set",
        "train",
        "rerank",
        "eval",
        "report",
        "experiment",
        "bench-throughput",
        "benchmark",
    ] {
        assert!(top.contains(sub), "{sub} missing from --help");
    }
    let train = ok(&["train", "--help"]);
    for flag in [
        "--loss",
        "--epochs",
        "--batch-size",
        "--lr",
        "--schedule",
        "--seed",
        "--config",
        "--threads",
    ] {
        assert!(train.contains(flag), "{flag} missing from train --help");
    }
    let rerank_help = ok(&["rerank", "--help"]);
    for flag in ["--k0", "--k ", "--query-cap", "--checkpoint", "--passthrough"] {
        assert!(rerank_help.contains(flag), "{flag} missing from rerank --help");
    }
}

#[test]
fn config_values_apply_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, "cutoff = 1\nname = \"from-config\"\nloss = \"mse\"\n").unwrap();
    let (run, qrels) = (fixture("fixture.run"), fixture("fixture-qrels.tsv"));
    let base = ["eval", "--run", s(&run), "--qrels", s(&qrels), "--config", s(&config)];
    let stdout = ok(&base);
    assert!(stdout.contains("from-config") && stdout.contains("NDCG@1 "), "{stdout}");
    let mut overridden = base.to_vec();
    overridden.extend(["--cutoff", "3"]);
    assert!(ok(&overridden).contains("NDCG@3 "));
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Runs the `rerank` binary with `args`, logging off.
pub fn rerank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rerank"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

/// Like [`rerank`], panicking with stderr unless the exit code is 0.
pub fn ok(args: &[&str]) -> String {
    let out = rerank(args);
    assert!(
        out.status.success(),
        "rerank {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Flags for a synthetic world small enough for quick tests.
pub const SMALL_WORLD: &[&str] = &[
    "--docs",
    "600",
    "--vocab",
    "800",
    "--topics",
    "10",
    "--train-queries",
    "150",
    "--eval-queries",
    "40",
    "--epochs",
    "5",
];

/// Runs `experiment` into `dir` with the small world and `seed`.
pub fn small_experiment(dir: &Path, seed: u64, threads: usize) -> String {
    let seed = seed.to_string();
    let threads = threads.to_string();
    let mut args = vec![
        "--threads",
        threads.as_str(),
        "experiment",
        "--seed",
        seed.as_str(),
        "--out-dir",
        s(dir),
    ];
    args.extend_from_slice(SMALL_WORLD);
    ok(&args)
}

/// Runs every subcommand except `bench-throughput` (whose output is
/// timing) into `dir` and returns each written file's bytes by relative path.
pub fn pipeline_artifacts(dir: &Path, threads: usize) -> std::collections::BTreeMap<String, Vec<u8>> {
    let t = threads.to_string();
    let xp = dir.join("xp");
    small_experiment(&xp, 21, threads);
    let p = |n: &str| xp.join(n);
    let o = |n: &str| dir.join(n);
    let (corpus, eval_q, train_q) = (p("corpus.jsonl"), p("eval-queries.jsonl"), p("train-queries.jsonl"));
    let (emb, sparse) = (p("embeddings.jsonl"), p("sparse.jsonl"));
    let spec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("spec.json")).unwrap()).unwrap();
    let teacher_seed = spec["teacher_seed"].to_string();
    let signals = ["--embeddings", s(&emb), "--sparse", s(&sparse)];
    let run = |args: &[&str], extra: &[&str]| {
        let mut all = vec!["--threads", t.as_str()];
        all.extend_from_slice(args);
        all.extend_from_slice(extra);
        ok(&all)
    };

    run(&["index", "--corpus", s(&corpus), "--out", s(&o("index.json"))], &[]);
    let index = o("index.json");
    let base = ["--corpus", s(&corpus), "--index", s(&index)];
    run(
        &[
            "retrieve",
            "--queries",
            s(&eval_q),
            "--retriever",
            "bm25",
            "--out",
            s(&o("bm25.run")),
        ],
        &base,
    );
    run(
        &[
            "retrieve",
            "--queries",
            s(&eval_q),
            "--retriever",
            "sparse",
            "--out",
            s(&o("sparse.run")),
        ],
        &[&base[..], &signals[..]].concat(),
    );
    run(
        &["mine", "--queries", s(&train_q), "--out", s(&o("pools.jsonl"))],
        &[&base[..], &signals[..]].concat(),
    );
    run(
        &[
            "teacher-score",
            "--queries",
            s(&train_q),
            "--pools",
            s(&o("pools.jsonl")),
            "--teacher-seed",
            &teacher_seed,
            "--corpus",
            s(&corpus),
            "--out",
            s(&o("teacher.tsv")),
        ],
        &signals,
    );
    run(
        &[
            "teacher-score",
            "--queries",
            s(&train_q),
            "--pools",
            s(&o("pools.jsonl")),
            "--teacher-file",
            s(&o("teacher.tsv")),
            "--out",
            s(&o("teacher-copy.tsv")),
        ],
        &[],
    );
    run(
        &[
            "build-set",
            "--kind",
            "mse",
            "--teacher-scores",
            s(&o("teacher.tsv")),
            "--out",
            s(&o("mse.jsonl")),
        ],
        &[],
    );
    run(
        &[
            "build-set",
            "--kind",
            "ranknet",
            "--teacher-scores",
            s(&o("teacher.tsv")),
            "--out",
            s(&o("perm.jsonl")),
        ],
        &[],
    );
    run(
        &[
            "build-set",
            "--kind",
            "bce",
            "--qrels",
            s(&p("qrels.tsv")),
            "--run",
            s(&o("bm25.run")),
            "--seed",
            "4",
            "--out",
            s(&o("bce.jsonl")),
        ],
        &[],
    );
    for (loss, samples, queries, ranks) in [
        ("mse", "mse.jsonl", &train_q, ["--pools", "pools.jsonl"]),
        ("ranknet", "perm.jsonl", &train_q, ["--pools", "pools.jsonl"]),
        ("bce", "bce.jsonl", &eval_q, ["--run", "bm25.run"]),
    ] {
        let ckpt = o(&format!("{loss}.json"));
        let log = o(&format!("{loss}.loss.csv"));
        let rank_file = o(ranks[1]);
        run(
            &[
                "train",
                "--samples",
                s(&o(samples)),
                "--loss",
                loss,
                "--queries",
                s(queries),
                "--epochs",
                "3",
                "--seed",
                "9",
                ranks[0],
                s(&rank_file),
                "--out",
                s(&ckpt),
                "--log",
                s(&log),
            ],
            &[&base[..], &signals[..]].concat(),
        );
    }
    run(
        &[
            "rerank",
            "--queries",
            s(&eval_q),
            "--run",
            s(&o("bm25.run")),
            "--checkpoint",
            s(&o("ranknet.json")),
            "--out",
            s(&o("reranked.run")),
        ],
        &[&base[..], &signals[..]].concat(),
    );
    run(
        &[
            "eval",
            "--run",
            s(&o("reranked.run")),
            "--baseline-run",
            s(&o("bm25.run")),
            "--qrels",
            s(&p("qrels.tsv")),
            "--queries",
            s(&eval_q),
            "--corpus",
            s(&corpus),
            "--out",
            s(&o("eval.json")),
        ],
        &[],
    );
    let manifest = o("manifest.toml");
    std::fs::write(
        &manifest,
        format!(
            "retriever = \"sparse\"\nk0 = 50\n\n[[dataset]]\nname = \"synthetic-a\"\ngroup = \"BEIR\"\ncorpus = \"{c}\"\n\
             queries = \"{q}\"\nqrels = \"{r}\"\nsparse = \"{sp}\"\n\n[[dataset]]\nname = \"synthetic-b\"\ngroup = \"PolEval\"\n\
             corpus = \"{c}\"\nqueries = \"{q}\"\nqrels = \"{r}\"\nsparse = \"{sp}\"\nembeddings = \"{e}\"\n",
            c = s(&corpus),
            q = s(&eval_q),
            r = s(&p("qrels.tsv")),
            sp = s(&sparse),
            e = s(&emb),
        ),
    )
    .unwrap();
    run(
        &[
            "benchmark",
            "--manifest",
            s(&manifest),
            "--checkpoint",
            s(&o("mse.json")),
            "--out-dir",
            s(&o("bench")),
        ],
        &[],
    );
    run(
        &[
            "report",
            "--model",
            s(&o("bench/model-report.json")),
            "--baseline",
            s(&o("bench/baseline-report.json")),
            "--out",
            s(&o("report.json")),
            "--chart",
            s(&o("chart.csv")),
        ],
        &[],
    );

    let mut files = std::collections::BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

/// Byte-level differences between two artifact sets, manifest excluded
/// (it embeds absolute paths).
pub fn artifact_differences(
    a: &std::collections::BTreeMap<String, Vec<u8>>,
    b: &std::collections::BTreeMap<String, Vec<u8>>,
) -> Vec<String> {
    let keys: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .filter(|k| k.as_str() != "manifest.toml" && a.get(*k) != b.get(*k))
        .cloned()
        .collect()
}

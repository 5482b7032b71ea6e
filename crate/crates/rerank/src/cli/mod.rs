//! The `rerank` command line: one subcommand per pipeline stage.

mod commands;
mod inputs;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use rerank_core::eval::Gain;
use rerank_core::experiment::StageOne;
use rerank_core::optim::Schedule;
use rerank_core::train::LossKind;

use crate::config::apply_config;
use crate::exec::RayonExecutor;
use crate::{Error, ExitStatus, Result};

#[derive(Debug, Parser)]
#[command(
    name = "rerank",
    version,
    about = "Retrieve-then-rerank pipeline stages, distillation and evaluation"
)]
pub struct Cli {
    /// Worker threads; 0 uses every core. Outputs do not depend on this.
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    pub threads: usize,

    /// TOML file of flag values (`key = value`, key = long flag name).
    /// Flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a BM25 inverted index for a corpus.
    Index(IndexArgs),
    /// Retrieve the top k0 documents per query and write a TREC run.
    Retrieve(RetrieveArgs),
    /// Pool the top candidates of every available retriever per query.
    Mine(MineArgs),
    /// Score mined candidate pools with a teacher.
    TeacherScore(TeacherScoreArgs),
    /// Turn judgments or teacher scores into a training set.
    BuildSet(BuildSetArgs),
    /// Train a reranker checkpoint on a training set.
    Train(TrainArgs),
    /// Rerank the candidates of a run file.
    Rerank(RerankArgs),
    /// Compute NDCG@k of a run against judgments.
    Eval(EvalArgs),
    /// Aggregate per-dataset scores and compare against a baseline.
    Report(ReportArgs),
    /// Run the full synthetic distillation experiment.
    Experiment(ExperimentArgs),
    /// Measure single-threaded reranking throughput.
    BenchThroughput(BenchThroughputArgs),
    /// Run a reranker over every dataset of a benchmark manifest.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
pub struct SignalArgs {
    /// Unit-length embeddings for documents and queries (JSON lines `_id`, `vector`).
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,

    /// Sparse expansion weights for documents and queries (JSON lines `_id`, `weights`).
    #[arg(long, value_name = "FILE")]
    pub sparse: Option<PathBuf>,

    /// BM25 index written by `index`; built from the corpus when omitted.
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ScorerArgs {
    /// Reranker checkpoint written by `train` or `experiment`.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,

    /// Keep the first-stage scores (no reranking).
    #[arg(long)]
    pub passthrough: bool,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// BEIR corpus (JSON lines `_id`, `title`, `text`).
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    /// Output index (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    /// BEIR queries (JSON lines `_id`, `text`).
    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,

    #[command(flatten)]
    pub signals: SignalArgs,

    /// First-stage retriever: bm25, dense or sparse.
    #[arg(long, default_value = "bm25", value_name = "NAME")]
    pub retriever: StageOne,

    /// Documents retrieved per query.
    #[arg(long, default_value_t = 100)]
    pub k0: usize,

    /// Use only the first N queries.
    #[arg(long, value_name = "N")]
    pub query_cap: Option<usize>,

    /// Output TREC run.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,

    /// Dense and sparse retrievers join BM25 when their inputs are given.
    #[command(flatten)]
    pub signals: SignalArgs,

    /// Candidates taken from each retriever.
    #[arg(long, default_value_t = rerank_core::distill::DEFAULT_PER_RETRIEVER_K, value_name = "N")]
    pub per_retriever_k: usize,

    #[arg(long, value_name = "N")]
    pub query_cap: Option<usize>,

    /// Output pools (JSON lines).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("teacher").required(true).args(["teacher_file", "teacher_seed"])))]
pub struct TeacherScoreArgs {
    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,

    /// Candidate pools written by `mine`.
    #[arg(long, value_name = "FILE")]
    pub pools: PathBuf,

    /// Precomputed teacher scores (TSV `query_id`, `doc_id`, `score`).
    #[arg(long, value_name = "FILE")]
    pub teacher_file: Option<PathBuf>,

    /// Name recorded for a file teacher.
    #[arg(long, default_value = "teacher", value_name = "TAG")]
    pub teacher_tag: String,

    /// Use the synthetic hidden-MLP teacher with this seed (needs --corpus).
    #[arg(long, value_name = "SEED", requires = "corpus")]
    pub teacher_seed: Option<u64>,

    /// Hidden width of the synthetic teacher.
    #[arg(long, default_value_t = rerank_core::model::DEFAULT_HIDDEN, value_name = "H")]
    pub teacher_hidden: usize,

    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,

    #[command(flatten)]
    pub signals: SignalArgs,

    /// Output teacher scores (TSV).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildSetArgs {
    /// Set kind: bce (from judgments and a run), mse or ranknet (from teacher scores).
    #[arg(long, value_name = "KIND")]
    pub kind: LossKind,

    /// Teacher scores written by `teacher-score` (mse, ranknet).
    #[arg(long, value_name = "FILE", required_if_eq_any([("kind", "mse"), ("kind", "ranknet")]))]
    pub teacher_scores: Option<PathBuf>,

    #[arg(long, default_value = "teacher", value_name = "TAG")]
    pub teacher_tag: String,

    /// Documents per permutation sample (ranknet).
    #[arg(long, default_value_t = rerank_core::train::DEFAULT_LIST_LENGTH, value_name = "N")]
    pub list_length: usize,

    /// Judgments (bce).
    #[arg(long, value_name = "FILE", required_if_eq("kind", "bce"))]
    pub qrels: Option<PathBuf>,

    /// First-stage run supplying hard negatives (bce).
    #[arg(long, value_name = "FILE", required_if_eq("kind", "bce"))]
    pub run: Option<PathBuf>,

    /// Hard negatives per positive (bce).
    #[arg(long, default_value_t = rerank_core::train::NEGATIVES_PER_POSITIVE, value_name = "N")]
    pub negatives: usize,

    /// Seed for negative sampling (bce).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output samples (JSON lines); metadata goes to `<out>.meta.json`.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training set written by `build-set`.
    #[arg(long, value_name = "FILE")]
    pub samples: PathBuf,

    /// Objective: bce, mse or ranknet. Must match the sample kind.
    #[arg(long, value_name = "LOSS")]
    pub loss: LossKind,

    /// Passes over the training set [default: 20].
    #[arg(long)]
    pub epochs: Option<usize>,

    /// Samples per optimizer step [default: 32].
    #[arg(long)]
    pub batch_size: Option<usize>,

    /// Peak learning rate [default: 1e-2 for ranknet, 1e-3 otherwise].
    #[arg(long)]
    pub lr: Option<f64>,

    /// Learning-rate schedule: linear (decay to 0) or constant [default: linear].
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: Option<Schedule>,

    /// Seed for sample shuffling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Seed for the initial weights [default: --seed].
    #[arg(long)]
    pub init_seed: Option<u64>,

    /// Hidden layer width.
    #[arg(long, default_value_t = rerank_core::model::DEFAULT_HIDDEN, value_name = "H")]
    pub hidden: usize,

    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,

    #[command(flatten)]
    pub signals: SignalArgs,

    /// Pools whose best retriever rank feeds the rank feature.
    #[arg(long, value_name = "FILE", conflicts_with = "run")]
    pub pools: Option<PathBuf>,

    /// Run whose ranks feed the rank feature.
    #[arg(long, value_name = "FILE")]
    pub run: Option<PathBuf>,

    /// Name stored in the checkpoint and written into reranked runs.
    #[arg(long, value_name = "TAG")]
    pub tag: Option<String>,

    /// Output checkpoint (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,

    /// Per-step loss log (CSV).
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,

    #[command(flatten)]
    pub signals: SignalArgs,

    /// First-stage run to rerank.
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,

    #[command(flatten)]
    pub scorer: ScorerArgs,

    /// Documents kept per query after reranking.
    #[arg(long, default_value_t = 10)]
    pub k: usize,

    /// Rerank only the first K0 candidates of each list [default: all].
    #[arg(long)]
    pub k0: Option<usize>,

    /// Rerank only the first N lists.
    #[arg(long, value_name = "N")]
    pub query_cap: Option<usize>,

    /// Output TREC run.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Run to evaluate.
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,

    /// Judgments (TSV with header `query-id`, `corpus-id`, `score`).
    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,

    /// Query set; judged queries missing from the run then count as 0.
    #[arg(long, value_name = "FILE")]
    pub queries: Option<PathBuf>,

    /// Corpus used to check that judged documents exist.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,

    /// NDCG cutoff.
    #[arg(long, default_value_t = rerank_core::eval::DEFAULT_CUTOFF)]
    pub cutoff: usize,

    /// Gain per grade: linear (g) or exponential (2^g - 1).
    #[arg(long, default_value = "linear", value_parser = parse_gain)]
    pub gain: Gain,

    /// Dataset name in the report [default: qrels file stem].
    #[arg(long)]
    pub name: Option<String>,

    /// Dataset group in the report.
    #[arg(long, default_value = "Other")]
    pub group: String,

    /// Second run to report as the baseline.
    #[arg(long, value_name = "FILE")]
    pub baseline_run: Option<PathBuf>,

    /// Output report (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Model scores: a report JSON or a TSV `dataset`, `group`, `ndcg`.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,

    /// Baseline scores in the same formats.
    #[arg(long, value_name = "FILE")]
    pub baseline: Option<PathBuf>,

    #[arg(long)]
    pub model_name: Option<String>,

    #[arg(long)]
    pub baseline_name: Option<String>,

    /// Output aggregated report (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Per-dataset deltas sorted ascending (CSV).
    #[arg(long, value_name = "FILE", requires = "baseline")]
    pub chart: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Base seed; world, teacher, initial weights and shuffling derive from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_name = "N")]
    pub docs: Option<usize>,

    #[arg(long, value_name = "N")]
    pub vocab: Option<usize>,

    #[arg(long, value_name = "N")]
    pub topics: Option<usize>,

    #[arg(long, value_name = "N")]
    pub topic_words: Option<usize>,

    #[arg(long, value_name = "N")]
    pub train_queries: Option<usize>,

    #[arg(long, value_name = "N")]
    pub eval_queries: Option<usize>,

    #[arg(long, value_name = "N")]
    pub dense_dim: Option<usize>,

    /// Stage-one retriever reranked at evaluation time [default: dense].
    #[arg(long, value_name = "NAME")]
    pub retriever: Option<StageOne>,

    #[arg(long)]
    pub k0: Option<usize>,

    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long)]
    pub cutoff: Option<usize>,

    #[arg(long, value_name = "N")]
    pub per_retriever_k: Option<usize>,

    #[arg(long, value_name = "N")]
    pub list_length: Option<usize>,

    #[arg(long, value_name = "H")]
    pub teacher_hidden: Option<usize>,

    #[arg(long, value_name = "H")]
    pub student_hidden: Option<usize>,

    /// Epochs for both students.
    #[arg(long)]
    pub epochs: Option<usize>,

    /// Batch size for both students.
    #[arg(long)]
    pub batch_size: Option<usize>,

    #[arg(long)]
    pub mse_lr: Option<f64>,

    #[arg(long)]
    pub ranknet_lr: Option<f64>,

    /// Schedule for both students: linear or constant.
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: Option<Schedule>,

    /// Directory for every artifact of the run.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchThroughputArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,

    #[command(flatten)]
    pub signals: SignalArgs,

    /// Run supplying the candidates.
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,

    #[command(flatten)]
    pub scorer: ScorerArgs,

    /// Candidates reranked per query; several depths may be given, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "100", value_name = "M")]
    pub depth: Vec<usize>,

    #[arg(long, value_name = "N")]
    pub query_cap: Option<usize>,

    /// Reference rows to compare against (TSV `model`, `qps`).
    #[arg(long, value_name = "FILE")]
    pub reference: Option<PathBuf>,

    /// Output measurements (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Benchmark manifest (TOML).
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,

    #[command(flatten)]
    pub scorer: ScorerArgs,

    /// Directory for reports and runs.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

fn parse_schedule(s: &str) -> std::result::Result<Schedule, String> {
    match s {
        "linear" | "linear-decay" | "linear_decay" => Ok(Schedule::LinearDecay),
        "constant" => Ok(Schedule::Constant),
        other => Err(format!("unknown schedule `{other}` (linear, constant)")),
    }
}

fn parse_gain(s: &str) -> std::result::Result<Gain, String> {
    match s {
        "linear" => Ok(Gain::Linear),
        "exponential" | "exp" => Ok(Gain::Exponential),
        other => Err(format!("unknown gain `{other}` (linear, exponential)")),
    }
}

fn command() -> clap::Command {
    Cli::command()
        .args_override_self(true)
        .mut_subcommands(|c| c.args_override_self(true))
}

/// Parses `args` (program name first) after merging any `--config` file.
pub fn parse(args: Vec<OsString>) -> Result<std::result::Result<Cli, clap::Error>> {
    let cmd = command();
    let args = apply_config(&cmd, args)?;
    Ok(cmd.try_get_matches_from(args).and_then(|m| Cli::from_arg_matches(&m)))
}

pub fn execute(cli: Cli) -> Result<()> {
    let exec = RayonExecutor::new(cli.threads)?;
    log::debug!("running with {} worker threads", exec.threads());
    match cli.command {
        Command::Index(a) => commands::index(a),
        Command::Retrieve(a) => commands::retrieve(a, &exec),
        Command::Mine(a) => commands::mine(a, &exec),
        Command::TeacherScore(a) => commands::teacher_score(a, &exec),
        Command::BuildSet(a) => commands::build_set(a),
        Command::Train(a) => commands::train(a, &exec),
        Command::Rerank(a) => commands::rerank(a, &exec),
        Command::Eval(a) => commands::eval(a),
        Command::Report(a) => commands::report(a),
        Command::Experiment(a) => commands::experiment(a, &exec),
        Command::BenchThroughput(a) => commands::bench_throughput(a),
        Command::Benchmark(a) => commands::benchmark(a, &exec),
    }
}

/// Runs the tool and returns the process exit status. Errors go to stderr.
pub fn run(args: Vec<OsString>) -> ExitStatus {
    let cli = match parse(args) {
        Ok(Ok(cli)) => cli,
        Ok(Err(e)) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitStatus::Usage
            } else {
                ExitStatus::Ok
            };
        }
        Err(e) => return report_error(&e),
    };
    match execute(cli) {
        Ok(()) => ExitStatus::Ok,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &Error) -> ExitStatus {
    eprintln!("error: {e}");
    e.exit_status()
}

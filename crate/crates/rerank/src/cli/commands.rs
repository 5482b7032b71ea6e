use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rerank_core::corpus::{Corpus, Dataset, DatasetGroup, Document, Query};
use rerank_core::distill::{
    build_mse_set, build_permutation_set, mine_candidates, score_pool, FileTeacher, HiddenMlpTeacher, Teacher,
    TeacherScores,
};
use rerank_core::eval::{aggregate, compare_chart_data, evaluate_run, EvalReport};
use rerank_core::exec::Executor;
use rerank_core::experiment::{run_distillation_experiment, ExperimentSpec, MSE_SYSTEM, RANKNET_SYSTEM};
use rerank_core::features::{FeatureVector, FEATURE_COUNT};
use rerank_core::model::ScorerParams;
use rerank_core::pipeline::run_benchmark;
use rerank_core::ranked::RankedList;
use rerank_core::rerank::{rerank as rerank_list, PairScorer, RerankRequest};
use rerank_core::retrieval::{InvertedIndex, Retriever};
use rerank_core::text::WordTokenizer;
use rerank_core::train::{build_bce_samples, train as train_scorer, LossKind, TrainConfig, TrainingSet};

use super::inputs::{self, query_map, Signals};
use super::{
    BenchThroughputArgs, BenchmarkArgs, BuildSetArgs, EvalArgs, ExperimentArgs, IndexArgs, MineArgs, ReportArgs,
    RerankArgs, RetrieveArgs, TeacherScoreArgs, TrainArgs,
};
use crate::exec::RayonExecutor;
use crate::formats::{
    load_checkpoint, load_pools, load_qrels, load_report, load_run, load_samples, load_score_table,
    load_teacher_scores, render_table, save_chart_csv, save_checkpoint, save_corpus, save_embeddings, save_json,
    save_loss_log, save_pools, save_qrels, save_queries, save_report, save_run, save_samples, save_sparse,
    save_teacher_scores, Checkpoint, ScoreTable, SetMetadata,
};
use crate::manifest::BenchmarkManifest;
use crate::throughput::{load_reference_throughput, measure_throughput, render_throughput};
use crate::{Error, Result};

fn missing_query(id: &str) -> rerank_core::Error {
    rerank_core::Error::missing("query", id)
}

pub fn index(a: IndexArgs) -> Result<()> {
    let corpus = inputs::corpus(&a.corpus)?;
    let index = InvertedIndex::build(&corpus, &WordTokenizer)?;
    save_json(&a.out, &index)?;
    println!(
        "indexed {} documents, {} terms, mean length {:.2} -> {}",
        index.doc_count(),
        index.term_count(),
        index.avg_doc_length(),
        a.out.display()
    );
    Ok(())
}

pub fn retrieve(a: RetrieveArgs, exec: &RayonExecutor) -> Result<()> {
    let signals = Signals::load(inputs::corpus(&a.corpus)?, &a.signals)?;
    let queries = inputs::queries(&a.queries, a.query_cap)?;
    let retriever = signals.retriever(a.retriever)?;
    let runs = exec.try_map(&queries, |q| retriever.retrieve(q, a.k0))?;
    save_run(&a.out, &runs)?;
    println!(
        "{}: top {} for {} queries -> {}",
        retriever.tag(),
        a.k0,
        runs.len(),
        a.out.display()
    );
    Ok(())
}

pub fn mine(a: MineArgs, exec: &RayonExecutor) -> Result<()> {
    let signals = Signals::load(inputs::corpus(&a.corpus)?, &a.signals)?;
    let queries = inputs::queries(&a.queries, a.query_cap)?;
    let retrievers = signals.available_retrievers()?;
    let refs: Vec<&dyn Retriever> = retrievers.iter().map(|r| r.as_ref()).collect();
    let pools = exec.try_map(&queries, |q| mine_candidates(q, &refs, a.per_retriever_k))?;
    save_pools(&a.out, &pools)?;
    let sizes: Vec<usize> = pools.iter().map(|p| p.len()).collect();
    let names: Vec<&str> = refs.iter().map(|r| r.tag()).collect();
    println!(
        "{} pools from {} x top {}: mean size {:.2}, max {} -> {}",
        pools.len(),
        names.join("+"),
        a.per_retriever_k,
        sizes.iter().sum::<usize>() as f64 / sizes.len().max(1) as f64,
        sizes.iter().max().copied().unwrap_or(0),
        a.out.display()
    );
    Ok(())
}

pub fn teacher_score(a: TeacherScoreArgs, exec: &RayonExecutor) -> Result<()> {
    let queries = inputs::queries(&a.queries, None)?;
    let by_id = query_map(&queries);
    let pools = load_pools(&a.pools)?;
    let teacher: Box<dyn Teacher> = match (&a.teacher_file, a.teacher_seed) {
        (Some(path), _) => {
            let mut t = FileTeacher::new(a.teacher_tag.as_str());
            for q in load_teacher_scores(path, &a.teacher_tag)?.queries {
                for (d, s) in q.scores {
                    t.insert(q.query_id.as_str(), d, s);
                }
            }
            Box::new(t)
        }
        (None, Some(seed)) => {
            let corpus = a
                .corpus
                .as_ref()
                .ok_or_else(|| Error::Usage("the synthetic teacher needs --corpus".into()))?;
            let signals = Signals::load(inputs::corpus(corpus)?, &a.signals)?;
            Box::new(HiddenMlpTeacher::new(seed, a.teacher_hidden, signals.context()?))
        }
        (None, None) => return Err(Error::Usage("give --teacher-file or --teacher-seed".into())),
    };
    let scored = exec.map(&pools, |pool| {
        let query = by_id
            .get(pool.query_id.as_str())
            .ok_or_else(|| missing_query(&pool.query_id))?;
        Ok(score_pool(teacher.as_ref(), query, pool))
    });
    let mut out = TeacherScores::new(teacher.tag());
    let mut failed = 0;
    for (pool, result) in pools.iter().zip(scored) {
        match result.map_err(|e: rerank_core::Error| Error::Core(e).context(a.pools.display().to_string()))? {
            Ok(scores) => out.queries.push(scores),
            Err(e) => {
                log::warn!("skipping query {}: {e}", pool.query_id);
                failed += 1;
            }
        }
    }
    save_teacher_scores(&a.out, &out)?;
    println!(
        "{}: {} pairs over {} queries ({} skipped) -> {}",
        out.teacher_tag,
        out.pair_count(),
        out.queries.len(),
        failed,
        a.out.display()
    );
    Ok(())
}

pub fn build_set(a: BuildSetArgs) -> Result<()> {
    let teacher_scores = || -> Result<TeacherScores> {
        let path = a
            .teacher_scores
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("--kind {} needs --teacher-scores", a.kind)))?;
        load_teacher_scores(path, &a.teacher_tag)
    };
    let (set, meta) = match a.kind {
        LossKind::Bce => {
            let (Some(qrels), Some(run)) = (&a.qrels, &a.run) else {
                return Err(Error::Usage("--kind bce needs --qrels and --run".into()));
            };
            let samples = build_bce_samples(&load_qrels(qrels)?, &load_run(run)?, a.negatives, a.seed);
            let n = samples.len();
            (
                TrainingSet::Bce(samples),
                meta(LossKind::Bce, n, None, None, Vec::new()),
            )
        }
        LossKind::Mse => {
            let scores = teacher_scores()?;
            let (samples, empty) = build_mse_set(&scores);
            let n = samples.len();
            (
                TrainingSet::Mse(samples),
                meta(LossKind::Mse, n, Some(scores.teacher_tag), None, empty),
            )
        }
        LossKind::RankNet => {
            let scores = teacher_scores()?;
            let (samples, skipped) = build_permutation_set(&scores, a.list_length)?;
            let n = samples.len();
            let m = meta(
                LossKind::RankNet,
                n,
                Some(scores.teacher_tag),
                Some(a.list_length),
                skipped,
            );
            (TrainingSet::RankNet(samples), m)
        }
    };
    if set.is_empty() {
        return Err(Error::Core(rerank_core::Error::Empty(format!(
            "no {} samples could be built",
            a.kind
        ))));
    }
    save_samples(&a.out, &set)?;
    meta.save(&a.out)?;
    println!(
        "{} {} samples ({} queries skipped) -> {}",
        set.len(),
        a.kind,
        meta.skipped_queries.len(),
        a.out.display()
    );
    Ok(())
}

fn meta(
    kind: LossKind,
    samples: usize,
    teacher_tag: Option<String>,
    list_length: Option<usize>,
    skipped_queries: Vec<String>,
) -> SetMetadata {
    SetMetadata {
        kind,
        samples,
        teacher_tag,
        list_length,
        skipped_queries,
    }
}

/// Every (query, document) pair a training set refers to.
fn training_pairs(set: &TrainingSet) -> BTreeSet<(String, String)> {
    match set {
        TrainingSet::Bce(s) => s.iter().map(|x| (x.query_id.clone(), x.doc_id.clone())).collect(),
        TrainingSet::Mse(s) => s.iter().map(|x| (x.query_id.clone(), x.doc_id.clone())).collect(),
        TrainingSet::RankNet(s) => s
            .iter()
            .flat_map(|x| x.ordered_doc_ids.iter().map(|d| (x.query_id.clone(), d.clone())))
            .collect(),
    }
}

pub fn train(a: TrainArgs, exec: &RayonExecutor) -> Result<()> {
    let set = load_samples(&a.samples)?;
    if set.kind() != a.loss {
        return Err(Error::Core(rerank_core::Error::KindMismatch {
            expected: a.loss.as_str(),
            found: set.kind().as_str(),
        })
        .context(a.samples.display().to_string()));
    }
    let defaults = ExperimentSpec::default();
    let base = if a.loss == LossKind::RankNet {
        defaults.ranknet
    } else {
        defaults.mse
    };
    let config = TrainConfig {
        epochs: a.epochs.unwrap_or(base.epochs),
        batch_size: a.batch_size.unwrap_or(base.batch_size),
        peak_lr: a.lr.unwrap_or(base.peak_lr),
        schedule: a.schedule.unwrap_or(base.schedule),
        seed: a.seed,
        optimizer: base.optimizer,
    };

    let signals = Signals::load(inputs::corpus(&a.corpus)?, &a.signals)?;
    let queries = inputs::queries(&a.queries, None)?;
    let by_id = query_map(&queries);
    let context = signals.context()?;
    let mut ranks: HashMap<(String, String), usize> = HashMap::new();
    if let Some(path) = &a.pools {
        for pool in load_pools(path)? {
            for c in &pool.candidates {
                ranks.insert((pool.query_id.clone(), c.doc_id.clone()), c.best_rank());
            }
        }
    }
    if let Some(path) = &a.run {
        for list in load_run(path)? {
            for (i, d) in list.doc_ids().enumerate() {
                ranks.insert((list.query_id.clone(), d.to_string()), i + 1);
            }
        }
    }
    let pairs: Vec<(String, String)> = training_pairs(&set).into_iter().collect();
    let features = exec.try_map(&pairs, |(q, d)| {
        let query = by_id.get(q.as_str()).ok_or_else(|| missing_query(q))?;
        context.features(query, d, ranks.get(&(q.clone(), d.clone())).copied())
    })?;
    let provider: BTreeMap<(String, String), FeatureVector> = pairs.into_iter().zip(features).collect();

    let initial = ScorerParams::seeded(FEATURE_COUNT, a.hidden, a.init_seed.unwrap_or(a.seed));
    let outcome = train_scorer(initial, &set, a.loss, &config, &provider)?;
    for (epoch, loss) in outcome.epoch_losses.iter().enumerate() {
        log::info!("epoch {}/{}: mean loss {loss:.6}", epoch + 1, config.epochs);
    }
    let tag = a.tag.unwrap_or_else(|| format!("student-{}", a.loss));
    let mut ckpt = Checkpoint::new(tag, &outcome.params);
    ckpt.loss = Some(a.loss.to_string());
    ckpt.seed = Some(a.seed);
    save_checkpoint(&a.out, &ckpt)?;
    if let Some(log) = &a.log {
        save_loss_log(log, &outcome.log)?;
    }
    println!(
        "{}: {} {} samples, {} epochs, final loss {:.6} -> {}",
        ckpt.tag,
        set.len(),
        a.loss,
        config.epochs,
        outcome.epoch_losses.last().copied().unwrap_or(f64::NAN),
        a.out.display()
    );
    Ok(())
}

pub fn rerank(a: RerankArgs, exec: &RayonExecutor) -> Result<()> {
    if a.k == 0 || a.k0 == Some(0) {
        return Err(Error::Usage("--k and --k0 must be at least 1".into()));
    }
    let signals = Signals::load(inputs::corpus(&a.corpus)?, &a.signals)?;
    let queries = inputs::queries(&a.queries, None)?;
    let by_id = query_map(&queries);
    let scorer = inputs::scorer(&a.scorer, &signals)?;
    let mut runs: Vec<RankedList> = load_run(&a.run)?;
    if let Some(cap) = a.query_cap {
        runs.truncate(cap);
    }
    if let Some(k0) = a.k0 {
        runs = runs.iter().map(|r| r.truncated(k0)).collect();
    }
    let corpus = &signals.corpus;
    let out = exec.try_map(&runs, |list| {
        let query = by_id
            .get(list.query_id.as_str())
            .ok_or_else(|| missing_query(&list.query_id))?;
        rerank_list(
            scorer.as_ref(),
            &RerankRequest {
                query,
                candidates: list,
                k: a.k,
            },
            corpus,
        )
    })?;
    save_run(&a.out, &out)?;
    println!(
        "{}: reranked {} lists, kept top {} -> {}",
        scorer.tag().unwrap_or("passthrough"),
        out.len(),
        a.k,
        a.out.display()
    );
    Ok(())
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
}

fn run_tag(runs: &[RankedList], path: &Path) -> String {
    runs.first().map_or_else(|| file_stem(path), |r| r.source_tag.clone())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let run = load_run(&a.run)?;
    let baseline_run = a.baseline_run.as_ref().map(load_run).transpose()?;
    let qrels = load_qrels(&a.qrels)?;
    let queries = match &a.queries {
        Some(path) => inputs::queries(path, None)?,
        None => {
            let ids: BTreeSet<&str> = qrels
                .iter()
                .map(|(q, _)| q)
                .chain(
                    run.iter()
                        .chain(baseline_run.iter().flatten())
                        .map(|r| r.query_id.as_str()),
                )
                .collect();
            ids.into_iter().map(|id| Query::new(id, "")).collect()
        }
    };
    let corpus = match &a.corpus {
        Some(path) => inputs::corpus(path)?,
        None => {
            let ids: BTreeSet<&str> = qrels.iter().flat_map(|(_, g)| g.keys().map(String::as_str)).collect();
            let docs = ids.into_iter().map(|id| Document::new(id, None, id)).collect();
            Arc::new(Corpus::from_documents(docs)?)
        }
    };
    let name = a.name.clone().unwrap_or_else(|| file_stem(&a.qrels));
    let group = DatasetGroup::from(a.group.as_str());
    let dataset = Dataset::new(name.as_str(), group.clone(), corpus, queries, qrels)?;
    let groups = BTreeMap::from([(name.clone(), group)]);

    let model_eval = evaluate_run(&run, &dataset, a.cutoff, a.gain)?;
    let model_tag = run_tag(&run, &a.run);
    let baseline = match (&baseline_run, &a.baseline_run) {
        (Some(runs), Some(path)) => {
            let e = evaluate_run(runs, &dataset, a.cutoff, a.gain)?;
            let scores = BTreeMap::from([(name.clone(), e.mean)]);
            Some(aggregate(run_tag(runs, path), &scores, &groups, None)?)
        }
        _ => None,
    };
    let scores = BTreeMap::from([(name.clone(), model_eval.mean)]);
    let report = aggregate(model_tag.as_str(), &scores, &groups, baseline.as_ref())?;

    println!(
        "{name}: {model_tag} NDCG@{} = {} over {} judged queries",
        a.cutoff,
        model_eval.mean,
        model_eval.evaluated()
    );
    let mut rows: Vec<&EvalReport> = baseline.iter().collect();
    rows.push(&report);
    print!("{}", render_table(&rows));
    if let Some(out) = &a.out {
        save_report(out, &report)?;
    }
    Ok(())
}

/// Model name (JSON reports only) and per-dataset scores.
fn load_scores(path: &Path) -> Result<(Option<String>, ScoreTable)> {
    if path.extension().is_some_and(|e| e == "json") {
        let r = load_report(path)?;
        let table = ScoreTable {
            per_dataset: r.per_dataset,
            groups: r.groups,
        };
        Ok((Some(r.model), table))
    } else {
        Ok((None, load_score_table(path)?))
    }
}

pub fn report(a: ReportArgs) -> Result<()> {
    let baseline = match &a.baseline {
        Some(path) => {
            let (name, table) = load_scores(path)?;
            let name = a.baseline_name.clone().or(name).unwrap_or_else(|| file_stem(path));
            Some(aggregate(name, &table.per_dataset, &table.groups, None)?)
        }
        None => None,
    };
    let (name, table) = load_scores(&a.model)?;
    let name = a.model_name.clone().or(name).unwrap_or_else(|| file_stem(&a.model));
    let model = aggregate(name, &table.per_dataset, &table.groups, baseline.as_ref())?;

    let mut rows: Vec<&EvalReport> = baseline.iter().collect();
    rows.push(&model);
    print!("{}", render_table(&rows));
    if let Some(cmp) = &model.baseline {
        println!(
            "{} of {} datasets improved; overall {:+.4}",
            cmp.improved.len(),
            model.per_dataset.len(),
            cmp.overall_delta
        );
    }
    if let Some(out) = &a.out {
        save_report(out, &model)?;
    }
    if let (Some(chart), Some(base)) = (&a.chart, &baseline) {
        save_chart_csv(chart, &compare_chart_data(&model, base)?)?;
    }
    Ok(())
}

fn experiment_spec(a: &ExperimentArgs) -> ExperimentSpec {
    let mut spec = ExperimentSpec::with_seed(a.seed);
    let w = &mut spec.world;
    let sizes = [
        (&mut w.docs, a.docs),
        (&mut w.vocab, a.vocab),
        (&mut w.topics, a.topics),
        (&mut w.topic_words, a.topic_words),
        (&mut w.train_queries, a.train_queries),
        (&mut w.eval_queries, a.eval_queries),
        (&mut w.dense_dim, a.dense_dim),
        (&mut spec.pipeline.k0, a.k0),
        (&mut spec.pipeline.k, a.k),
        (&mut spec.pipeline.cutoff, a.cutoff),
        (&mut spec.per_retriever_k, a.per_retriever_k),
        (&mut spec.list_length, a.list_length),
        (&mut spec.teacher_hidden, a.teacher_hidden),
        (&mut spec.student_hidden, a.student_hidden),
    ];
    for (field, value) in sizes {
        if let Some(v) = value {
            *field = v;
        }
    }
    if let Some(r) = a.retriever {
        spec.stage_one = r;
    }
    for c in [&mut spec.mse, &mut spec.ranknet] {
        c.epochs = a.epochs.unwrap_or(c.epochs);
        c.batch_size = a.batch_size.unwrap_or(c.batch_size);
        c.schedule = a.schedule.unwrap_or(c.schedule);
    }
    spec.mse.peak_lr = a.mse_lr.unwrap_or(spec.mse.peak_lr);
    spec.ranknet.peak_lr = a.ranknet_lr.unwrap_or(spec.ranknet.peak_lr);
    spec
}

pub fn experiment(a: ExperimentArgs, exec: &RayonExecutor) -> Result<()> {
    let spec = experiment_spec(&a);
    let (report, art) = run_distillation_experiment(&spec, exec)?;
    let dir = &a.out_dir;
    let at = |name: &str| -> PathBuf { dir.join(name) };
    let world = &art.env.world;

    save_json(&at("spec.json"), &spec)?;
    save_corpus(at("corpus.jsonl"), world.corpus.documents())?;
    save_queries(at("train-queries.jsonl"), &world.train_queries)?;
    save_queries(at("eval-queries.jsonl"), &world.eval_queries)?;
    save_embeddings(at("embeddings.jsonl"), &world.embeddings)?;
    save_sparse(at("sparse.jsonl"), &world.sparse)?;
    save_pools(at("pools.jsonl"), &art.pools)?;
    save_teacher_scores(at("teacher-scores.tsv"), &art.teacher_scores)?;

    let teacher_tag = Some(art.teacher_scores.teacher_tag.clone());
    let (mse_samples, empty) = build_mse_set(&art.teacher_scores);
    let mse_meta = meta(LossKind::Mse, mse_samples.len(), teacher_tag.clone(), None, empty);
    save_samples(at("mse-samples.jsonl"), &TrainingSet::Mse(mse_samples))?;
    mse_meta.save(&at("mse-samples.jsonl"))?;
    let (perm_samples, skipped) = build_permutation_set(&art.teacher_scores, spec.list_length)?;
    let perm_meta = meta(
        LossKind::RankNet,
        perm_samples.len(),
        teacher_tag,
        Some(spec.list_length),
        skipped,
    );
    save_samples(at("ranknet-samples.jsonl"), &TrainingSet::RankNet(perm_samples))?;
    perm_meta.save(&at("ranknet-samples.jsonl"))?;

    for (name, params, loss, config, log) in [
        (MSE_SYSTEM, &art.mse_student, LossKind::Mse, &spec.mse, &art.mse_log),
        (
            RANKNET_SYSTEM,
            &art.ranknet_student,
            LossKind::RankNet,
            &spec.ranknet,
            &art.ranknet_log,
        ),
    ] {
        let mut ckpt = Checkpoint::new(name, params);
        ckpt.loss = Some(loss.to_string());
        ckpt.seed = Some(config.seed);
        save_checkpoint(at(&format!("{name}.json")), &ckpt)?;
        save_loss_log(at(&format!("{name}.loss.csv")), log)?;
    }
    save_qrels(at("qrels.tsv"), &art.eval_dataset.qrels)?;
    save_run(at("stage1.run"), &art.stage1)?;
    for (system, run) in &art.runs {
        save_run(at(&format!("runs/{system}.run")), run)?;
    }
    save_json(&at("report.json"), &report)?;

    let width = report.systems.iter().map(|s| s.system.len()).max().unwrap_or(0).max(6);
    println!(
        "seed {}: {} train / {} eval queries, mean pool {:.2}",
        report.world_seed, report.train_queries, report.eval_queries, report.mean_pool_size
    );
    println!(
        "{:<width$}  {:>8}  {:>8}",
        "system",
        format!("NDCG@{}", report.cutoff),
        "tau"
    );
    for s in &report.systems {
        println!("{:<width$}  {:>8.4}  {:>8.4}", s.system, s.ndcg, s.kendall_tau);
    }
    println!("artifacts -> {}", dir.display());
    Ok(())
}

pub fn bench_throughput(a: BenchThroughputArgs) -> Result<()> {
    if a.depth.contains(&0) {
        return Err(Error::Usage("--depth values must be at least 1".into()));
    }
    let signals = Signals::load(inputs::corpus(&a.corpus)?, &a.signals)?;
    let queries = inputs::queries(&a.queries, None)?;
    let by_id = query_map(&queries);
    let scorer = inputs::scorer(&a.scorer, &signals)?;
    let mut runs = load_run(&a.run)?;
    if let Some(cap) = a.query_cap {
        runs.truncate(cap);
    }
    runs.retain(|r| !r.is_empty());
    let matched: Vec<Query> = runs
        .iter()
        .map(|r| {
            by_id
                .get(r.query_id.as_str())
                .map(|q| (*q).clone())
                .ok_or_else(|| missing_query(&r.query_id))
        })
        .collect::<std::result::Result<_, _>>()?;
    let tag = scorer.tag().unwrap_or("passthrough").to_string();
    let measured = a
        .depth
        .iter()
        .map(|&m| {
            measure_throughput(
                scorer.as_ref(),
                &signals.corpus,
                &matched,
                &runs,
                m,
                &format!("{tag}@{m}"),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = a
        .reference
        .as_ref()
        .map(load_reference_throughput)
        .transpose()?
        .unwrap_or_default();
    print!("{}", render_throughput(&measured, &reference));
    if let Some(out) = &a.out {
        save_json(out, &measured)?;
    }
    Ok(())
}

pub fn benchmark(a: BenchmarkArgs, exec: &RayonExecutor) -> Result<()> {
    let manifest = BenchmarkManifest::load(&a.manifest)?;
    let mut datasets = Vec::new();
    let mut signals = HashMap::new();
    for entry in &manifest.datasets {
        let loaded = entry.load()?;
        let needs = match manifest.retriever {
            rerank_core::experiment::StageOne::Dense => loaded.embeddings.is_none().then_some("embeddings"),
            rerank_core::experiment::StageOne::Sparse => loaded.sparse.is_none().then_some("sparse"),
            rerank_core::experiment::StageOne::Bm25 => None,
        };
        if let Some(what) = needs {
            return Err(Error::Usage(format!(
                "dataset {} has no {what} for the {} retriever",
                entry.name,
                manifest.retriever.as_str()
            )));
        }
        signals.insert(entry.name.clone(), (loaded.embeddings, loaded.sparse));
        datasets.push(loaded.dataset);
    }
    let checkpoint = a.scorer.checkpoint.as_ref().map(load_checkpoint).transpose()?;
    let model_tag = checkpoint
        .as_ref()
        .map_or("passthrough", |(c, _)| c.tag.as_str())
        .to_string();
    let build = |d: &Dataset| -> rerank_core::Result<(Box<dyn Retriever>, Box<dyn PairScorer>)> {
        let (embeddings, sparse) = signals[&d.name].clone();
        let index = InvertedIndex::build(&d.corpus, &WordTokenizer)?;
        let s = Signals::new(d.corpus.clone(), index, embeddings, sparse);
        let as_core = |e: Error| rerank_core::Error::Invalid(e.to_string());
        let retriever = s.retriever(manifest.retriever).map_err(as_core)?;
        let scorer: Box<dyn PairScorer> = match &checkpoint {
            Some((ckpt, params)) => Box::new(rerank_core::rerank::MlpScorer::new(
                params.clone(),
                s.context().map_err(as_core)?,
                ckpt.tag.as_str(),
            )),
            None => Box::new(rerank_core::rerank::PassthroughScorer),
        };
        Ok((retriever, scorer))
    };
    let result = run_benchmark(
        &manifest.pipeline(),
        &datasets,
        &build,
        &model_tag,
        manifest.retriever.as_str(),
        exec,
    )?;
    print!("{}", render_table(&[&result.baseline, &result.model]));
    if let Some(dir) = &a.out_dir {
        save_report(dir.join("baseline-report.json"), &result.baseline)?;
        save_report(dir.join("model-report.json"), &result.model)?;
        save_chart_csv(
            dir.join("chart.csv"),
            &compare_chart_data(&result.model, &result.baseline)?,
        )?;
        for run in &result.runs {
            save_run(dir.join(format!("runs/{}.stage1.run", run.dataset)), &run.stage1)?;
            save_run(dir.join(format!("runs/{}.reranked.run", run.dataset)), &run.reranked)?;
        }
    }
    Ok(())
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use listrank::config::load_config;
use listrank::distill_run::{run_distill, DistillJob};
use listrank::http::{HttpBackend, HttpConfig};
use listrank::io::{
    read_corpus, read_embeddings, read_groups, read_jsonl, read_qrels, read_queries, read_run,
    to_json_line, write_atomic, write_jsonl, write_run,
};
use listrank::report::build_report;
use listrank::rerank_run::{rerank_run, RerankJob, Strategy};
use listrank::retry::{RetryBackend, RetryPolicy};
use listrank_core::distill::{curate, PipelineConfig};
use listrank_core::embed::{
    greedy_diversity_select, kmeans_centroid_select, quality_filter, random_select,
    top_k_by_distance, DiversityConfig, DiversityMetric, EmbeddingRecord, QualityPair,
    KMEANS_DEFAULT_ITERS,
};
use listrank_core::eval::{Gain, Run, RunEntry, DEFAULT_REL_THRESHOLD};
use listrank_core::rerank::{Backend, MockBackend, PromptMode, RerankOptions, WindowConfig};
use serde::{Deserialize, Serialize};

/// Embedding curation, listwise reranking, teacher distillation and IR
/// evaluation.
#[derive(Debug, Parser)]
#[command(name = "listrank", version)]
struct Cli {
    /// Pipeline configuration (JSON); command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Concurrent queries for `rerank` and `distill`.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pair each query with its nearest document and drop weak pairs.
    Filter(FilterArgs),
    /// Pick a diverse subset of embeddings.
    Select(SelectArgs),
    /// Filter then select in one pass, with a stage manifest.
    Curate(CurateArgs),
    /// Nearest documents per query as a TREC run.
    Retrieve(RetrieveArgs),
    /// Label queries with teacher rankings.
    Distill(DistillArgs),
    /// Rerank a TREC run.
    Rerank(RerankArgs),
    /// Score a run against qrels.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Cosine,
    Euclidean,
}

impl From<MetricArg> for DiversityMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Cosine => DiversityMetric::Cosine,
            MetricArg::Euclidean => DiversityMetric::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Text,
    Multimodal,
}

impl From<ModeArg> for PromptMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Text => PromptMode::Text,
            ModeArg::Multimodal => PromptMode::Multimodal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GainArg {
    Linear,
    Exponential,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SelectStrategy {
    Greedy,
    Random,
    Kmeans,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[arg(long)]
    query_emb: PathBuf,
    #[arg(long)]
    corpus_emb: PathBuf,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[arg(long)]
    embeddings: PathBuf,
    /// Restrict selection to the documents of a `filter` output, keyed by query id.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "greedy")]
    strategy: SelectStrategy,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    #[arg(long, default_value_t = 0)]
    seed_index: usize,
    /// Record the average similarity at each greedy step.
    #[arg(long)]
    trace: bool,
    #[arg(long, default_value_t = KMEANS_DEFAULT_ITERS)]
    iters: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CurateArgs {
    #[arg(long)]
    corpus_emb: PathBuf,
    #[arg(long)]
    query_emb: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[arg(long)]
    query_emb: PathBuf,
    #[arg(long)]
    corpus_emb: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "euclidean")]
    tag: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BackendArgs {
    /// `mock:identity`, `mock:reverse`, `mock:oracle`, `mock:scripted:<file>` or `http`.
    #[arg(long, default_value = "mock:identity")]
    backend: String,
    /// Judgments answering `mock:oracle`.
    #[arg(long)]
    oracle_qrels: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Request timeout in seconds.
    #[arg(long, default_value_t = 120)]
    timeout: u64,
    #[arg(long, default_value_t = 5)]
    max_attempts: u32,
}

#[derive(Debug, Args)]
struct WindowArgs {
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
struct DistillArgs {
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    query_emb: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    corpus_emb: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the confidence-filtered labels here.
    #[arg(long)]
    selected: Option<PathBuf>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    /// Continue from `<out>.ckpt` if present.
    #[arg(long)]
    resume: bool,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Debug, Args)]
struct RerankArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, conflicts_with = "pairwise")]
    listwise: bool,
    #[arg(long)]
    pairwise: bool,
    /// Pairwise: compare every pair of candidates.
    #[arg(long, requires = "pairwise")]
    tournament: bool,
    /// Rerank only this many top entries per query.
    #[arg(long)]
    depth: Option<usize>,
    /// Treat any repaired or unreadable answer as a failure.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value = "listrank")]
    tag: String,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long)]
    run: PathBuf,
    /// `qid group` lines for macro averaging.
    #[arg(long)]
    groups: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "linear")]
    gain: GainArg,
    #[arg(long, default_value_t = DEFAULT_REL_THRESHOLD)]
    rel_threshold: u32,
    /// Reject duplicate judgments.
    #[arg(long)]
    strict_qrels: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PairLine {
    query_id: String,
    doc_id: String,
    similarity: f64,
}

#[derive(Debug, Serialize)]
struct FilterManifest {
    kind: &'static str,
    queries: usize,
    kept: usize,
    dropped_below_threshold: usize,
    dropped_zero_vector: usize,
    threshold: f64,
}

#[derive(Debug, Serialize)]
struct SelectManifest<'a> {
    kind: &'static str,
    strategy: &'a str,
    candidates: usize,
    k: usize,
    selected: usize,
    metric: DiversityMetric,
    seed_index: usize,
    seed: u64,
    rounds: usize,
}

/// Whether a command finished cleanly or with per-query failures.
enum Status {
    Clean,
    PartialFailure(usize),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Clean) => ExitCode::SUCCESS,
        Ok(Status::PartialFailure(n)) => {
            log::warn!("{n} queries failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn base_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn parallelism(cli: &Cli) -> usize {
    cli.parallelism
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
        .max(1)
}

fn apply_window(cfg: &mut PipelineConfig, w: &WindowArgs) -> Result<()> {
    if let Some(size) = w.window {
        cfg.window.window_size = size;
    }
    if let Some(stride) = w.stride {
        cfg.window.stride = stride;
    }
    if let Some(mode) = w.mode {
        cfg.mode = mode.into();
    }
    WindowConfig::new(cfg.window.window_size, cfg.window.stride)?;
    Ok(())
}

fn print_summary<T: Serialize>(summary: &T) {
    println!("{}", to_json_line(summary));
}

fn run(cli: Cli) -> Result<Status> {
    let mut cfg = base_config(&cli)?;
    let par = parallelism(&cli);
    match &cli.command {
        Command::Filter(a) => {
            if let Some(t) = a.threshold {
                cfg.quality_threshold = t;
            }
            cfg.validate()?;
            filter(a, &cfg)
        }
        Command::Select(a) => {
            if let Some(k) = a.k {
                cfg.selection_k = k;
            }
            if let Some(m) = a.metric {
                cfg.metric = m.into();
            }
            cfg.validate()?;
            select(a, &cfg)
        }
        Command::Curate(a) => {
            if let Some(t) = a.threshold {
                cfg.quality_threshold = t;
            }
            if let Some(k) = a.k {
                cfg.selection_k = k;
            }
            if let Some(m) = a.metric {
                cfg.metric = m.into();
            }
            let corpus = read_embeddings(&a.corpus_emb)?;
            let queries = a.query_emb.as_deref().map(read_embeddings).transpose()?;
            let curation = curate(&corpus, queries.as_deref(), &cfg)?;
            write_jsonl(
                &a.out,
                Some(&curation.manifest),
                &curation.selection.selected_ids,
            )?;
            print_summary(&curation.manifest);
            Ok(Status::Clean)
        }
        Command::Retrieve(a) => {
            if let Some(k) = a.k {
                cfg.top_k = k;
            }
            cfg.validate()?;
            retrieve(a, &cfg)
        }
        Command::Distill(a) => {
            if let Some(k) = a.top_k {
                cfg.top_k = k;
            }
            if a.budget.is_some() {
                cfg.budget = a.budget;
            }
            apply_window(&mut cfg, &a.window)?;
            cfg.validate()?;
            distill(a, &cfg, par)
        }
        Command::Rerank(a) => {
            apply_window(&mut cfg, &a.window)?;
            rerank(a, &cfg, par)
        }
        Command::Eval(a) => eval(a),
    }
}

fn filter(a: &FilterArgs, cfg: &PipelineConfig) -> Result<Status> {
    let queries = read_embeddings(&a.query_emb)?;
    let corpus = read_embeddings(&a.corpus_emb)?;
    let mut pairs = Vec::with_capacity(queries.len());
    for q in &queries {
        let nearest = top_k_by_distance(&q.vector, &corpus, 1)?[0].index;
        pairs.push(QualityPair {
            query: &q.vector[..],
            doc: &corpus[nearest].vector[..],
            payload: (q.id.as_str(), corpus[nearest].id.as_str()),
        });
    }
    let report = quality_filter(pairs, cfg.quality_threshold)?;
    let manifest = FilterManifest {
        kind: "quality_filter",
        queries: queries.len(),
        kept: report.kept.len(),
        dropped_below_threshold: report.dropped_below,
        dropped_zero_vector: report.dropped_zero,
        threshold: cfg.quality_threshold,
    };
    let lines = report
        .kept
        .iter()
        .zip(&report.sims)
        .map(|(p, &similarity)| PairLine {
            query_id: p.payload.0.into(),
            doc_id: p.payload.1.into(),
            similarity,
        });
    write_jsonl(&a.out, Some(&manifest), lines)?;
    print_summary(&manifest);
    Ok(Status::Clean)
}

/// Records keyed by query id and carrying the paired document's vector.
fn records_from_pairs(
    pairs_path: &Path,
    corpus: &[EmbeddingRecord],
) -> Result<Vec<EmbeddingRecord>> {
    let by_id: BTreeMap<&str, &EmbeddingRecord> =
        corpus.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut rows = read_jsonl::<serde_json::Value>(pairs_path)?.into_iter();
    rows.next().context("pairs file has no manifest line")?;
    rows.map(|(line, value)| {
        let pair: PairLine = serde_json::from_value(value)
            .with_context(|| format!("{}:{line}", pairs_path.display()))?;
        let doc = by_id.get(pair.doc_id.as_str()).with_context(|| {
            format!(
                "{}:{line}: unknown document {}",
                pairs_path.display(),
                pair.doc_id
            )
        })?;
        Ok(EmbeddingRecord::new(pair.query_id, doc.vector.clone()))
    })
    .collect()
}

fn select(a: &SelectArgs, cfg: &PipelineConfig) -> Result<Status> {
    let corpus = read_embeddings(&a.embeddings)?;
    let records = match &a.pairs {
        Some(p) => records_from_pairs(p, &corpus)?,
        None => corpus,
    };
    let k = cfg.selection_k;
    let (name, result) = match a.strategy {
        SelectStrategy::Greedy => {
            let div = DiversityConfig {
                metric: cfg.metric,
                seed_index: a.seed_index,
                trace: a.trace,
            };
            ("greedy", greedy_diversity_select(&records, k, &div)?)
        }
        SelectStrategy::Random => ("random", random_select(&records, k, cfg.seed)?),
        SelectStrategy::Kmeans => (
            "kmeans",
            kmeans_centroid_select(&records, k, cfg.seed, a.iters)?,
        ),
    };
    let manifest = SelectManifest {
        kind: "selection",
        strategy: name,
        candidates: records.len(),
        k,
        selected: result.len(),
        metric: cfg.metric,
        seed_index: a.seed_index,
        seed: cfg.seed,
        rounds: result.passes,
    };
    match &result.trace {
        Some(trace) => write_jsonl(&a.out, Some(&manifest), trace)?,
        None => write_jsonl(&a.out, Some(&manifest), &result.selected_ids)?,
    }
    print_summary(&manifest);
    Ok(Status::Clean)
}

fn retrieve(a: &RetrieveArgs, cfg: &PipelineConfig) -> Result<Status> {
    let queries = read_embeddings(&a.query_emb)?;
    let corpus = read_embeddings(&a.corpus_emb)?;
    let mut entries = Vec::new();
    for q in &queries {
        let hits = top_k_by_distance(&q.vector, &corpus, cfg.top_k)?;
        entries.extend(hits.iter().enumerate().map(|(r, h)| RunEntry {
            query_id: q.id.clone(),
            doc_id: corpus[h.index].id.clone(),
            rank: r + 1,
            score: 0.0 - h.distance,
            tag: a.tag.clone(),
        }));
    }
    write_run(&entries, &a.out)?;
    Ok(Status::Clean)
}

type DynBackend = Box<dyn Backend + Send + Sync>;

fn make_backend(a: &BackendArgs) -> Result<DynBackend> {
    let name = a.backend.as_str();
    let backend: DynBackend = match name {
        "mock:identity" => Box::new(MockBackend::identity()),
        "mock:reverse" => Box::new(MockBackend::reverse()),
        "mock:oracle" => {
            let path = a
                .oracle_qrels
                .as_ref()
                .context("mock:oracle needs --oracle-qrels")?;
            Box::new(MockBackend::oracle(read_qrels(path, false)?))
        }
        "http" => {
            let endpoint = a
                .endpoint
                .clone()
                .context("http backend needs --endpoint")?;
            let model = a.model.clone().context("http backend needs --model")?;
            let mut cfg = HttpConfig::new(endpoint, model);
            cfg.timeout = Duration::from_secs(a.timeout);
            let policy = RetryPolicy {
                max_attempts: a.max_attempts.max(1),
                ..RetryPolicy::default()
            };
            Box::new(RetryBackend::new(HttpBackend::new(cfg), policy))
        }
        other => match other.strip_prefix("mock:scripted:") {
            Some(path) => {
                let responses: Vec<String> = read_jsonl::<String>(Path::new(path))?
                    .into_iter()
                    .map(|(_, s)| s)
                    .collect();
                Box::new(MockBackend::scripted(responses))
            }
            None => bail!("unknown backend {other:?}"),
        },
    };
    Ok(backend)
}

fn distill(a: &DistillArgs, cfg: &PipelineConfig, par: usize) -> Result<Status> {
    let queries = read_queries(&a.queries)?;
    let query_embs = read_embeddings(&a.query_emb)?;
    let docs = read_corpus(&a.corpus)?;
    let corpus_embs = read_embeddings(&a.corpus_emb)?;
    let backend = make_backend(&a.backend)?;
    let job = DistillJob {
        queries: &queries,
        query_embs: &query_embs,
        corpus_embs: &corpus_embs,
        config: cfg,
        out: &a.out,
        selected: a.selected.as_deref(),
        parallelism: par,
        resume: a.resume,
    };
    let summary = run_distill(&job, &docs, &backend)?;
    print_summary(&summary);
    Ok(match summary.failures.len() {
        0 => Status::Clean,
        n => Status::PartialFailure(n),
    })
}

fn rerank(a: &RerankArgs, cfg: &PipelineConfig, par: usize) -> Result<Status> {
    let entries = read_run(&a.run)?;
    let queries = read_queries(&a.queries)?
        .into_iter()
        .map(|q| (q.id.clone(), q))
        .collect();
    let docs = read_corpus(&a.corpus)?;
    let backend = make_backend(&a.backend)?;
    let job = RerankJob {
        strategy: if a.pairwise {
            Strategy::Pairwise
        } else {
            Strategy::Listwise
        },
        options: RerankOptions {
            window: cfg.window,
            mode: cfg.mode,
            strict: a.strict,
            tournament: a.tournament,
        },
        depth: a.depth,
        tag: a.tag.clone(),
        parallelism: par,
    };
    let (out, summary) = rerank_run(&entries, &queries, &docs, &backend, &job);
    write_run(&out, &a.out)?;
    print_summary(&summary);
    Ok(match summary.failures.len() {
        0 => Status::Clean,
        n => Status::PartialFailure(n),
    })
}

fn eval(a: &EvalArgs) -> Result<Status> {
    let mut qrels = read_qrels(&a.qrels, a.strict_qrels)?;
    if let Some(groups) = &a.groups {
        read_groups(groups, &mut qrels)?;
    }
    let run = Run::from_entries(&read_run(&a.run)?);
    let gain = match a.gain {
        GainArg::Linear => Gain::Linear,
        GainArg::Exponential => Gain::Exponential,
    };
    let grouping = a.groups.as_ref().map(|p| p.display().to_string());
    let report = build_report(&qrels, &run, gain, a.rel_threshold, grouping);
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    match &a.out {
        Some(path) => write_atomic(path, json.as_bytes())?,
        None => print!("{json}"),
    }
    Ok(Status::Clean)
}

//! Stage implementations over a run directory. Each stage reads earlier
//! stages' outputs, writes its own under `<run_dir>/<stage>/` and records a
//! manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::config::{ConfigError, LoadedConfig, PipelineConfig};
use crate::corpus::{self, VerilogModuleChunk};
use crate::embedding::{build_embedder, embed, Embedder};
use crate::evalkit::{render_summary, run_benchmark, write_report, BenchmarkTask, EvalConfig, GenerationRecord};
use crate::gateway::{build_gateway, GatewayMode, LlmGateway};
use crate::judge::Judge;
use crate::manifest::{validate_chain, FileDigest, StageManifest};
use crate::rag::{
    chunk_document, example_chunks, mine_pairs, train_retriever, ChunkKind, ChunkStore, ContrastivePair, MiningConfig,
    RagPrompter, RetrieverIndex, RetrieverModel,
};
use crate::scorer::{filter_high_quality, request_llm_scores, score_all, train_scorer, ScoredSample, ScorerModel};
use crate::synth::{
    default_problem_types, export_sft_round1, export_sft_round2, filter_pairs, generate_pairs, parse_problem_types,
    sample_specs, ProblemCodePair, VerdictStatus,
};
use crate::util::{read_jsonl, rng_for, sub_seed, write_atomic, write_jsonl};

#[derive(Debug)]
pub enum PipelineError {
    Config(ConfigError),
    Stage { stage: String, message: String },
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Config(e) => e.fmt(f),
            PipelineError::Stage { stage, message } => write!(f, "stage `{stage}`: {message}"),
        }
    }
}

impl std::error::Error for PipelineError {}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        PipelineError::Config(e)
    }
}

type StageResult<T> = Result<T, String>;

fn err<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> StageResult<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(err)?;
    s.push('\n');
    write_atomic(path, s.as_bytes()).map_err(|e| format!("{}: {e}", path.display()))
}

/// Bookkeeping for one stage execution.
struct StageRun<'a> {
    lc: &'a LoadedConfig,
    stage: String,
    dir: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<PathBuf>,
}

impl<'a> StageRun<'a> {
    fn new(lc: &'a LoadedConfig, stage: &str) -> StageResult<Self> {
        let dir = lc.config.paths.run_dir.join(stage);
        fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        Ok(StageRun {
            lc,
            stage: stage.into(),
            dir,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn cfg(&self) -> &PipelineConfig {
        &self.lc.config
    }

    fn run_dir(&self) -> &Path {
        &self.lc.config.paths.run_dir
    }

    /// Path of an earlier stage's artifact, recorded as an input.
    fn artifact(&mut self, stage: &str, file: &str) -> StageResult<PathBuf> {
        let p = self.run_dir().join(stage).join(file);
        if !p.exists() {
            return Err(format!("missing input {stage}/{file}; run `{stage}` first"));
        }
        self.inputs
            .push(FileDigest::of_run_file(self.run_dir(), &p).map_err(err)?);
        Ok(p)
    }

    fn external(&mut self, name: &str, p: &Path) -> StageResult<()> {
        let d = FileDigest::of_external(name, p).map_err(|e| format!("{}: {e}", p.display()))?;
        self.inputs.push(d);
        Ok(())
    }

    fn output(&mut self, file: &str) -> PathBuf {
        let p = self.dir.join(file);
        self.outputs.push(p.clone());
        p
    }

    fn finish(self) -> StageResult<StageManifest> {
        let run_dir = self.lc.config.paths.run_dir.clone();
        let outputs = self
            .outputs
            .iter()
            .map(|p| FileDigest::of_run_file(&run_dir, p))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let m = StageManifest {
            stage: self.stage.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.lc.config.seed,
            config_hash: self.lc.hash.clone(),
            inputs: self.inputs,
            outputs,
        };
        m.write(&run_dir).map_err(err)?;
        Ok(m)
    }

    fn gateway(&self) -> StageResult<Arc<dyn LlmGateway>> {
        build_gateway(&self.cfg().gateway).map_err(err)
    }

    fn embedder(&self) -> StageResult<Arc<dyn Embedder>> {
        build_embedder(&self.cfg().embedder).map_err(err)
    }
}

fn read<T: serde::de::DeserializeOwned>(p: &Path) -> StageResult<Vec<T>> {
    read_jsonl(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn write_rows<T: Serialize>(p: &Path, rows: &[T]) -> StageResult<()> {
    write_jsonl(p, rows).map_err(|e| format!("{}: {e}", p.display()))
}

fn ingest(s: &mut StageRun) -> StageResult<()> {
    let cfg = s.cfg().clone();
    let exts: BTreeSet<String> = match &cfg.paths.extensions {
        Some(v) => v.iter().cloned().collect(),
        None => corpus::default_extensions(),
    };
    s.external("corpus", &cfg.paths.corpus)?;
    let (chunks, report) = corpus::ingest(&cfg.paths.corpus, &exts).map_err(err)?;
    log::info!("ingest: {} files, {} modules after dedupe", report.files, report.chunks);
    write_rows(&s.output("chunks.jsonl"), &chunks)?;
    write_json(&s.output("report.json"), &report)
}

fn score_train(s: &mut StageRun) -> StageResult<()> {
    let cfg = s.cfg().clone();
    let chunks: Vec<VerilogModuleChunk> = read(&s.artifact("ingest", "chunks.jsonl")?)?;
    let mut label = chunks.clone();
    if cfg.scorer.label_count > 0 && cfg.scorer.label_count < label.len() {
        label.shuffle(&mut rng_for(cfg.seed, "score-train", "labels"));
        label.truncate(cfg.scorer.label_count);
        label.sort_by(|a, b| a.id.cmp(&b.id));
    }
    let gw = s.gateway()?;
    let run = request_llm_scores(&label, gw.as_ref(), cfg.scorer.temperature, cfg.scorer.top_p).map_err(err)?;
    write_rows(&s.output("llm_scores.jsonl"), &run.samples)?;
    write_rows(&s.output("dropped.jsonl"), &run.dropped)?;
    let text: BTreeMap<&str, &str> = label.iter().map(|c| (c.id.as_str(), c.text.as_str())).collect();
    let texts: Vec<String> = run
        .samples
        .iter()
        .map(|x| text[x.chunk_id.as_str()].to_string())
        .collect();
    let embs = embed(&texts, s.embedder()?.as_ref(), cfg.embedder.batch_size).map_err(err)?;
    let labeled: Vec<(Vec<f64>, f64)> = embs.into_iter().zip(run.samples.iter().map(|x| x.score)).collect();
    let mut mcfg = cfg.scorer.model.clone();
    mcfg.seed = sub_seed(cfg.seed, "score-train", "model");
    let model = train_scorer(&labeled, &mcfg).map_err(err)?;
    model.save(&s.output("scorer.bin")).map_err(err)?;
    write_json(&s.output("train.json"), &model.meta)
}

#[derive(Serialize)]
struct ScoreSummary {
    total: usize,
    kept: usize,
    threshold: f64,
    fraction: f64,
}

fn score_run(s: &mut StageRun) -> StageResult<()> {
    let cfg = s.cfg().clone();
    let model = ScorerModel::load(&s.artifact("score-train", "scorer.bin")?).map_err(err)?;
    let chunks: Vec<VerilogModuleChunk> = read(&s.artifact("ingest", "chunks.jsonl")?)?;
    let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
    let embs = embed(&texts, s.embedder()?.as_ref(), cfg.embedder.batch_size).map_err(err)?;
    let items: Vec<(String, Vec<f64>)> = chunks.iter().map(|c| c.id.clone()).zip(embs).collect();
    let scores: Vec<ScoredSample> = score_all(&model, &items).map_err(err)?;
    let keep: BTreeSet<String> = filter_high_quality(&scores, cfg.scorer.threshold).into_iter().collect();
    let high: Vec<&VerilogModuleChunk> = chunks.iter().filter(|c| keep.contains(&c.id)).collect();
    write_rows(&s.output("scores.jsonl"), &scores)?;
    write_rows(&s.output("high_quality.jsonl"), &high)?;
    let summary = ScoreSummary {
        total: chunks.len(),
        kept: high.len(),
        threshold: cfg.scorer.threshold,
        fraction: if chunks.is_empty() {
            0.0
        } else {
            high.len() as f64 / chunks.len() as f64
        },
    };
    write_json(&s.output("summary.json"), &summary)
}

fn synth(s: &mut StageRun) -> StageResult<()> {
    let cfg = s.cfg().clone();
    let types = match &cfg.paths.problem_types {
        Some(p) => {
            s.external("problem_types", p)?;
            parse_problem_types(&fs::read_to_string(p).map_err(err)?)
        }
        None => default_problem_types(),
    };
    if types.is_empty() {
        return Err("problem type list is empty".into());
    }
    let specs = sample_specs(cfg.synth.count, sub_seed(cfg.seed, "synth", "specs"), &types);
    let gw = s.gateway()?;
    let pairs = generate_pairs(&specs, gw.as_ref(), cfg.synth.temperature, cfg.synth.top_p);
    write_rows(&s.output("pairs.jsonl"), &pairs)
}

fn status_name(v: &VerdictStatus) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|x| x.as_str().map(String::from))
        .unwrap_or_default()
}

fn filter(s: &mut StageRun) -> StageResult<()> {
    let cfg = s.cfg().clone();
    let pairs: Vec<ProblemCodePair> = read(&s.artifact("synth", "pairs.jsonl")?)?;
    let filtered = filter_pairs(pairs, cfg.filter.n_vectors, cfg.seed, &cfg.filter);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for p in &filtered {
        if let Some(v) = &p.verdict {
            *counts.entry(status_name(&v.status)).or_default() += 1;
        }
    }
    write_rows(&s.output("pairs.jsonl"), &filtered)?;
    write_json(&s.output("summary.json"), &counts)
}

fn export_sft(s: &mut StageRun) -> StageResult<()> {
    let high: Vec<VerilogModuleChunk> = read(&s.artifact("score-run", "high_quality.jsonl")?)?;
    let pairs: Vec<ProblemCodePair> = read(&s.artifact("filter", "pairs.jsonl")?)?;
    let texts: Vec<String> = high.into_iter().map(|c| c.text).collect();
    export_sft_round1(&texts, &s.output("sft_round1.jsonl")).map_err(err)?;
    let n = export_sft_round2(&pairs, &s.output("sft_round2.jsonl")).map_err(err)?;
    log::info!("export-sft: {} round-1 rows, {n} round-2 rows", texts.len());
    Ok(())
}

fn doc_files(root: &Path) -> StageResult<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for e in walkdir::WalkDir::new(root).follow_links(false).sort_by_file_name() {
        let e = e.map_err(err)?;
        let name = e.file_name().to_string_lossy();
        if e.file_type().is_file() && (name.ends_with(".md") || name.ends_with(".txt")) {
            let rel = e
                .path()
                .strip_prefix(root)
                .unwrap_or(e.path())
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            out.push((rel, e.path().to_path_buf()));
        }
    }
    Ok(out)
}

fn rag_ingest(s: &mut StageRun, kind: ChunkKind) -> StageResult<()> {
    let cfg = s.cfg().clone();
    let chunks = match kind {
        ChunkKind::Example => {
            let high: Vec<VerilogModuleChunk> = read(&s.artifact("score-run", "high_quality.jsonl")?)?;
            example_chunks(&high)
        }
        ChunkKind::Knowledge => {
            let mut out = Vec::new();
            for (i, root) in cfg.paths.docs.iter().enumerate() {
                s.external(&format!("docs[{i}]"), root)?;
                for (rel, path) in doc_files(root)? {
                    let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                    out.extend(chunk_document(&rel, &text, cfg.rag.chunk_chars));
                }
            }
            out
        }
    };
    let store = ChunkStore::build(kind, chunks, s.embedder()?.as_ref(), &cfg.embedder).map_err(err)?;
    log::info!("rag-ingest/{kind}: {} chunks", store.len());
    store.save(&s.output("store")).map_err(err)
}

/// Mining problems from accepted synthetic pairs.
pub fn tasks_from_pairs(pairs: &[ProblemCodePair]) -> Vec<BenchmarkTask> {
    pairs
        .iter()
        .filter(|p| p.verdict.as_ref().is_some_and(|v| v.status == VerdictStatus::Accepted))
        .filter_map(|p| {
            let judge = match (&p.reference, &p.testbench) {
                (Some(r), _) => Judge::Reference(r.clone()),
                (None, Some(t)) => Judge::Testbench(t.clone()),
                (None, None) => return None,
            };
            Some(BenchmarkTask {
                id: p.id.clone(),
                problem: p.problem.clone(),
                judge,
                category: p.spec.problem_type.clone(),
            })
        })
        .collect()
}

fn rag_mine(s: &mut StageRun, kind: ChunkKind) -> StageResult<()> {
    let cfg = s.cfg().clone();
    let store = ChunkStore::load(&s.artifact(&format!("rag-ingest/{kind}"), "store")?).map_err(err)?;
    let problems: Vec<BenchmarkTask> = match &cfg.paths.mine_tasks {
        Some(p) => {
            s.external("mine_tasks", p)?;
            read(p)?
        }
        None => tasks_from_pairs(&read::<ProblemCodePair>(&s.artifact("filter", "pairs.jsonl")?)?),
    };
    let mcfg = MiningConfig {
        candidates_per_problem: cfg.rag.candidates_per_problem,
        temperature: cfg.rag.temperature,
        top_p: cfg.rag.top_p,
        seed: sub_seed(cfg.seed, "rag-mine", &kind.to_string()),
        judge: cfg.filter.clone(),
    };
    let gw = s.gateway()?;
    let report = mine_pairs(&problems, &store, s.embedder()?.as_ref(), gw.as_ref(), &mcfg).map_err(err)?;
    let pos = report
        .pairs
        .iter()
        .filter(|p| p.polarity == crate::rag::Polarity::Positive)
        .count();
    log::info!(
        "rag-mine/{kind}: {} pairs ({pos} positive), {} skipped",
        report.pairs.len(),
        report.skipped.len()
    );
    write_rows(&s.output("problems.jsonl"), &problems)?;
    write_rows(&s.output("pairs.jsonl"), &report.pairs)?;
    write_rows(&s.output("skipped.jsonl"), &report.skipped)
}

fn rag_train(s: &mut StageRun, kind: ChunkKind) -> StageResult<()> {
    let cfg = s.cfg().clone();
    let store = ChunkStore::load(&s.artifact(&format!("rag-ingest/{kind}"), "store")?).map_err(err)?;
    let mine = format!("rag-mine/{kind}");
    let problems: Vec<BenchmarkTask> = read(&s.artifact(&mine, "problems.jsonl")?)?;
    let pairs: Vec<ContrastivePair> = read(&s.artifact(&mine, "pairs.jsonl")?)?;
    let texts: Vec<String> = problems.iter().map(|p| p.problem.clone()).collect();
    let embs = embed(&texts, s.embedder()?.as_ref(), cfg.embedder.batch_size).map_err(err)?;
    let queries: BTreeMap<String, Vec<f64>> = problems.iter().map(|p| p.id.clone()).zip(embs).collect();
    let mut rcfg = cfg.rag.retriever.clone();
    rcfg.seed = sub_seed(cfg.seed, "rag-train", &kind.to_string());
    let model = train_retriever(&pairs, &queries, &store, &rcfg).map_err(err)?;
    model.save(&s.output("retriever.bin")).map_err(err)?;
    write_json(&s.output("train.json"), &model.meta)
}

/// Options of the `eval` stage beyond the config file.
#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub tasks: Option<PathBuf>,
    pub n: Option<u64>,
    pub ks: Option<Vec<u64>>,
    /// Run directory holding trained retrievers; the current run when absent.
    pub rag: Option<PathBuf>,
    pub no_rag: bool,
    /// Extra copy of the report outside the run directory.
    pub out: Option<PathBuf>,
}

struct RagAssets {
    kind: ChunkKind,
    model: RetrieverModel,
    store: ChunkStore,
}

fn load_rag(s: &mut StageRun, rag_dir: &Path) -> StageResult<Vec<RagAssets>> {
    let mut out = Vec::new();
    let internal = rag_dir == s.run_dir();
    for kind in [ChunkKind::Example, ChunkKind::Knowledge] {
        let model_p = rag_dir.join(format!("rag-train/{kind}/retriever.bin"));
        let store_p = rag_dir.join(format!("rag-ingest/{kind}/store"));
        if !model_p.is_file() || !store_p.is_dir() {
            continue;
        }
        if internal {
            s.artifact(&format!("rag-train/{kind}"), "retriever.bin")?;
            s.artifact(&format!("rag-ingest/{kind}"), "store")?;
        } else {
            s.external(&format!("rag/{kind}/retriever"), &model_p)?;
            s.external(&format!("rag/{kind}/store"), &store_p)?;
        }
        out.push(RagAssets {
            kind,
            model: RetrieverModel::load(&model_p).map_err(err)?,
            store: ChunkStore::load(&store_p).map_err(err)?,
        });
    }
    Ok(out)
}

fn eval(s: &mut StageRun, opts: &EvalOptions) -> StageResult<()> {
    let cfg = s.cfg().clone();
    let tasks_path = opts
        .tasks
        .clone()
        .or_else(|| cfg.paths.tasks.clone())
        .ok_or("no benchmark tasks: set paths.tasks or pass --tasks")?;
    s.external("tasks", &tasks_path)?;
    let tasks: Vec<BenchmarkTask> = read(&tasks_path)?;
    let ecfg = EvalConfig {
        n: opts.n.unwrap_or(cfg.eval.n),
        ks: opts.ks.clone().unwrap_or_else(|| cfg.eval.ks.clone()),
        temperature: cfg.eval.temperature,
        top_p: cfg.eval.top_p,
        seed: sub_seed(cfg.seed, "eval", ""),
        judge: cfg.filter.clone(),
        record_latency: cfg.gateway.mode == GatewayMode::Remote,
    };
    let assets = if cfg.eval.use_rag && !opts.no_rag {
        let dir = opts.rag.clone().unwrap_or_else(|| s.run_dir().to_path_buf());
        load_rag(s, &dir)?
    } else {
        Vec::new()
    };
    let embedder = s.embedder()?;
    let mut prompter = RagPrompter {
        embedder: embedder.as_ref(),
        example: None,
        knowledge: None,
        cfg: cfg.rag.prompt(),
    };
    for a in &assets {
        let ix = RetrieverIndex::new(&a.model, &a.store).map_err(err)?;
        match a.kind {
            ChunkKind::Example => prompter.example = Some(ix),
            ChunkKind::Knowledge => prompter.knowledge = Some(ix),
        }
    }
    let gw = s.gateway()?;
    let rag = (!assets.is_empty()).then_some(&prompter);
    let (report, records): (_, Vec<GenerationRecord>) = run_benchmark(&tasks, gw.as_ref(), rag, &ecfg).map_err(err)?;
    write_report(&report, &s.output("report.json")).map_err(err)?;
    if let Some(p) = &opts.out {
        write_report(&report, p).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    write_rows(&s.output("records.jsonl"), &records)?;
    let table = render_summary(&report.summary);
    write_atomic(&s.output("summary.txt"), table.as_bytes()).map_err(err)?;
    Ok(())
}

fn parse_kind(stage: &str) -> Option<ChunkKind> {
    stage.rsplit('/').next().and_then(|k| k.parse().ok())
}

/// Runs one stage by name, e.g. `ingest` or `rag-train/example`.
pub fn run_stage(lc: &LoadedConfig, stage: &str) -> Result<StageManifest, PipelineError> {
    run_stage_with(lc, stage, &EvalOptions::default())
}

pub fn run_stage_with(lc: &LoadedConfig, stage: &str, eval_opts: &EvalOptions) -> Result<StageManifest, PipelineError> {
    let wrap = |message: String| PipelineError::Stage {
        stage: stage.to_string(),
        message,
    };
    let mut s = StageRun::new(lc, stage).map_err(wrap)?;
    let kind = parse_kind(stage);
    let r = match (stage.split('/').next().unwrap_or(""), kind) {
        ("ingest", _) => ingest(&mut s),
        ("score-train", _) => score_train(&mut s),
        ("score-run", _) => score_run(&mut s),
        ("synth", _) => synth(&mut s),
        ("filter", _) => filter(&mut s),
        ("export-sft", _) => export_sft(&mut s),
        ("rag-ingest", Some(k)) => rag_ingest(&mut s, k),
        ("rag-mine", Some(k)) => rag_mine(&mut s, k),
        ("rag-train", Some(k)) => rag_train(&mut s, k),
        ("eval", _) => eval(&mut s, eval_opts),
        _ => Err(format!("unknown stage `{stage}`")),
    };
    r.map_err(wrap)?;
    s.finish().map_err(wrap)
}

/// The stages a full run executes for this config, in order.
pub fn planned_stages(cfg: &PipelineConfig) -> Vec<String> {
    let mut v: Vec<String> = ["ingest", "score-train", "score-run", "synth", "filter", "export-sft"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut kinds = vec!["example"];
    if !cfg.paths.docs.is_empty() {
        kinds.push("knowledge");
    }
    for stage in ["rag-ingest", "rag-mine", "rag-train"] {
        for k in &kinds {
            v.push(format!("{stage}/{k}"));
        }
    }
    if cfg.paths.tasks.is_some() {
        v.push("eval".into());
    }
    v
}

/// Runs every planned stage, then validates the manifest chain.
pub fn run_pipeline(lc: &LoadedConfig) -> Result<Vec<StageManifest>, PipelineError> {
    let mut out = Vec::new();
    for stage in planned_stages(&lc.config) {
        log::info!("stage {stage}");
        out.push(run_stage(lc, &stage)?);
    }
    validate_chain(&lc.config.paths.run_dir).map_err(|problems| PipelineError::Stage {
        stage: "pipeline".into(),
        message: format!("manifest chain invalid: {}", problems.join("; ")),
    })?;
    Ok(out)
}

/// Top-`k` chunks of a run's store for `query`, through the trained
/// retriever when one exists.
pub fn query_store(
    lc: &LoadedConfig,
    rag_dir: &Path,
    kind: ChunkKind,
    query: &str,
    k: usize,
) -> Result<Vec<(crate::rag::DocChunk, f64)>, PipelineError> {
    let stage = format!("rag-query/{kind}");
    let wrap = |message: String| PipelineError::Stage {
        stage: stage.clone(),
        message,
    };
    let store = ChunkStore::load(&rag_dir.join(format!("rag-ingest/{kind}/store"))).map_err(|e| wrap(e.to_string()))?;
    let model_p = rag_dir.join(format!("rag-train/{kind}/retriever.bin"));
    let model = if model_p.is_file() {
        RetrieverModel::load(&model_p).map_err(|e| wrap(e.to_string()))?
    } else {
        log::warn!("no trained {kind} retriever; using base embeddings");
        RetrieverModel::identity(store.dim, lc.config.rag.retriever.tau, store.embedder.clone())
    };
    let embedder = build_embedder(&lc.config.embedder).map_err(|e| wrap(e.to_string()))?;
    crate::rag::retrieve(&model, &store, embedder.as_ref(), query, k).map_err(|e| wrap(e.to_string()))
}

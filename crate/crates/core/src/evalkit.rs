//! Benchmark runner: repeated generation per task, judging, exact pass@k
//! and summary tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::gateway::{ChatRequest, LlmGateway};
use crate::judge::{check, functional, FuncVerdict, Judge, JudgeConfig};
use crate::rag::{generation_messages, RagError, RagPrompter};
use crate::util::{sub_seed, write_atomic};
use crate::verilog::TestbenchSpec;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("pass@k domain error: need 0 <= c <= n and 1 <= k <= n, got n={n} c={c} k={k}")]
    Domain { n: u64, c: u64, k: u64 },
    #[error("task import: {0}")]
    Import(String),
    #[error(transparent)]
    Rag(#[from] RagError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn binom(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `1 - C(n-c, k) / C(n, k)` as an exact fraction.
pub fn pass_at_k_exact(n: u64, c: u64, k: u64) -> Result<BigRational, EvalError> {
    if c > n || k == 0 || k > n {
        return Err(EvalError::Domain { n, c, k });
    }
    if n - c < k {
        return Ok(BigRational::one());
    }
    Ok(BigRational::one() - BigRational::new(binom(n - c, k), binom(n, k)))
}

/// Unbiased pass@k for `c` correct out of `n` samples.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, EvalError> {
    Ok(pass_at_k_exact(n, c, k)?.to_f64().expect("ratio in [0, 1]"))
}

/// A benchmark problem with exactly one judging mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTask {
    pub id: String,
    pub problem: String,
    pub judge: Judge,
    #[serde(default)]
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub task_id: String,
    /// 1-based.
    pub attempt: u32,
    pub raw_reply: String,
    pub verilog: String,
    pub syntax_ok: bool,
    pub func_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
    /// Gateway or prompt error for this attempt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// The functional check could not be run.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unverifiable: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    pub category: String,
    pub n: u64,
    pub c_syntax: u64,
    pub c_func: u64,
    /// Keyed by `k`.
    pub pass_syntax: BTreeMap<u64, f64>,
    pub pass_func: BTreeMap<u64, f64>,
}

impl TaskResult {
    pub fn from_counts(
        task_id: &str,
        category: &str,
        n: u64,
        c_syntax: u64,
        c_func: u64,
        ks: &[u64],
    ) -> Result<TaskResult, EvalError> {
        let mut pass_syntax = BTreeMap::new();
        let mut pass_func = BTreeMap::new();
        for &k in ks {
            pass_syntax.insert(k, pass_at_k(n, c_syntax, k)?);
            pass_func.insert(k, pass_at_k(n, c_func, k)?);
        }
        Ok(TaskResult {
            task_id: task_id.into(),
            category: category.into(),
            n,
            c_syntax,
            c_func,
            pass_syntax,
            pass_func,
        })
    }
}

fn default_n() -> u64 {
    10
}
fn default_ks() -> Vec<u64> {
    vec![1, 5]
}
fn default_temperature() -> f64 {
    0.8
}
fn default_top_p() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    #[serde(default = "default_n")]
    pub n: u64,
    #[serde(default = "default_ks")]
    pub ks: Vec<u64>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub judge: JudgeConfig,
    /// Wall-clock latency makes reports non-reproducible, so it is only
    /// recorded when asked (remote runs).
    #[serde(default)]
    pub record_latency: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n: default_n(),
            ks: default_ks(),
            temperature: default_temperature(),
            top_p: default_top_p(),
            seed: 0,
            judge: JudgeConfig::default(),
            record_latency: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSnapshot {
    pub n: u64,
    pub ks: Vec<u64>,
    pub temperature: f64,
    pub top_p: f64,
    pub seed: u64,
    pub rag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassAtKReport {
    pub config: RunSnapshot,
    pub tasks: Vec<TaskResult>,
    pub summary: Summary,
}

fn fence_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[^\n`]*\n(.*?)(?:```|\z)").unwrap())
}

fn module_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(?:module|macromodule)\b").unwrap())
}

fn endmodule_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\bendmodule\b").unwrap())
}

/// The first fenced code block, else the span from the first `module` to
/// the last `endmodule`. `None` if neither exists.
pub fn extract_verilog(reply: &str) -> Option<String> {
    if let Some(c) = fence_re().captures(reply) {
        return Some(c[1].trim_end().to_string() + "\n");
    }
    let start = module_re().find(reply)?.start();
    let end = endmodule_re().find_iter(&reply[start..]).last()?.end() + start;
    Some(reply[start..end].to_string() + "\n")
}

fn judge_attempt(
    task: &BenchmarkTask,
    attempt: u32,
    reply: Result<String, String>,
    latency_ms: Option<u64>,
    cfg: &EvalConfig,
) -> GenerationRecord {
    let mut rec = GenerationRecord {
        task_id: task.id.clone(),
        attempt,
        raw_reply: String::new(),
        verilog: String::new(),
        syntax_ok: false,
        func_ok: false,
        latency_ms,
        error: None,
        unverifiable: false,
        detail: String::new(),
    };
    let reply = match reply {
        Ok(r) => r,
        Err(e) => {
            rec.error = Some(e);
            return rec;
        }
    };
    rec.verilog = extract_verilog(&reply).unwrap_or_else(|| reply.clone());
    rec.raw_reply = reply;
    match check(&rec.verilog, &cfg.judge) {
        Ok(r) if r.ok => rec.syntax_ok = true,
        Ok(r) => {
            rec.detail = r.diagnostics.first().map(|d| d.to_string()).unwrap_or_default();
            return rec;
        }
        Err(e) => {
            rec.detail = e.to_string();
            rec.unverifiable = true;
            return rec;
        }
    }
    let seed = sub_seed(cfg.seed, "eval", &task.id);
    match functional(&rec.verilog, &task.judge, &cfg.judge, seed) {
        FuncVerdict::Pass { .. } => rec.func_ok = true,
        FuncVerdict::Fail { detail, .. } => rec.detail = detail,
        FuncVerdict::Unverifiable { detail } => {
            rec.unverifiable = true;
            rec.detail = detail;
        }
    }
    rec
}

/// Generates `cfg.n` designs per task (tag `eval:<task>:<attempt>`), judges
/// each and computes pass@k for syntax and function. Attempts run in
/// parallel; records come back in task then attempt order.
pub fn run_benchmark(
    tasks: &[BenchmarkTask],
    gateway: &dyn LlmGateway,
    rag: Option<&RagPrompter<'_>>,
    cfg: &EvalConfig,
) -> Result<(PassAtKReport, Vec<GenerationRecord>), EvalError> {
    for &k in &cfg.ks {
        if k == 0 || k > cfg.n {
            return Err(EvalError::Domain { n: cfg.n, c: 0, k });
        }
    }
    let prompts: Vec<Result<String, String>> = tasks
        .iter()
        .map(|t| match rag {
            Some(r) => r.prompt_for(&t.problem).map_err(|e| format!("rag: {e}")),
            None => Ok(t.problem.clone()),
        })
        .collect();
    let jobs: Vec<(usize, u32)> = (0..tasks.len())
        .flat_map(|t| (1..=cfg.n as u32).map(move |a| (t, a)))
        .collect();
    let records: Vec<GenerationRecord> = jobs
        .par_iter()
        .map(|&(ti, attempt)| {
            let task = &tasks[ti];
            let started = Instant::now();
            let reply = prompts[ti].clone().and_then(|prompt| {
                let req = ChatRequest::new(format!("eval:{}:{attempt}", task.id), generation_messages(&prompt))
                    .with_sampling(cfg.temperature, cfg.top_p);
                gateway.complete(&req).map_err(|e| format!("gateway: {e}"))
            });
            let latency = cfg.record_latency.then(|| started.elapsed().as_millis() as u64);
            judge_attempt(task, attempt, reply, latency, cfg)
        })
        .collect();

    let mut results = Vec::with_capacity(tasks.len());
    for (ti, task) in tasks.iter().enumerate() {
        let recs = &records[ti * cfg.n as usize..(ti + 1) * cfg.n as usize];
        let cs = recs.iter().filter(|r| r.syntax_ok).count() as u64;
        let cf = recs.iter().filter(|r| r.func_ok).count() as u64;
        results.push(TaskResult::from_counts(
            &task.id,
            &task.category,
            cfg.n,
            cs,
            cf,
            &cfg.ks,
        )?);
    }
    let summary = aggregate(&results);
    let report = PassAtKReport {
        config: RunSnapshot {
            n: cfg.n,
            ks: cfg.ks.clone(),
            temperature: cfg.temperature,
            top_p: cfg.top_p,
            seed: cfg.seed,
            rag: rag.is_some(),
        },
        tasks: results,
        summary,
    };
    Ok((report, records))
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_report(report: &PassAtKReport, path: &Path) -> io::Result<()> {
    let mut s = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_report(path: &Path) -> io::Result<PassAtKReport> {
    serde_json::from_slice(&fs::read(path)?).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub tasks: usize,
    /// Mean pass@k, keyed by `k`.
    pub syntax: BTreeMap<u64, f64>,
    pub func: BTreeMap<u64, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub categories: BTreeMap<String, SummaryRow>,
    pub overall: SummaryRow,
}

fn mean_row<'a>(rows: impl Iterator<Item = &'a TaskResult>) -> SummaryRow {
    let mut out = SummaryRow::default();
    for r in rows {
        out.tasks += 1;
        for (k, v) in &r.pass_syntax {
            *out.syntax.entry(*k).or_default() += v;
        }
        for (k, v) in &r.pass_func {
            *out.func.entry(*k).or_default() += v;
        }
    }
    let n = out.tasks.max(1) as f64;
    out.syntax.values_mut().for_each(|v| *v /= n);
    out.func.values_mut().for_each(|v| *v /= n);
    out
}

/// Per-category and overall mean pass@k. Tasks without a category are
/// grouped under `uncategorized`.
pub fn aggregate(results: &[TaskResult]) -> Summary {
    let mut cats: BTreeMap<String, Vec<&TaskResult>> = BTreeMap::new();
    for r in results {
        let c = if r.category.is_empty() {
            "uncategorized"
        } else {
            r.category.as_str()
        };
        cats.entry(c.to_string()).or_default().push(r);
    }
    Summary {
        categories: cats.into_iter().map(|(c, rs)| (c, mean_row(rs.into_iter()))).collect(),
        overall: mean_row(results.iter()),
    }
}

/// Aligned text table of percentages, one column pair per `k`.
pub fn render_summary(summary: &Summary) -> String {
    let ks: Vec<u64> = summary.overall.syntax.keys().copied().collect();
    let mut header = vec!["category".to_string(), "tasks".to_string()];
    for k in &ks {
        header.push(format!("Syn.@{k}"));
        header.push(format!("Func.@{k}"));
    }
    let mut rows = vec![header];
    let row = |name: &str, r: &SummaryRow| {
        let mut v = vec![name.to_string(), r.tasks.to_string()];
        for k in &ks {
            v.push(format!("{:.1}", 100.0 * r.syntax.get(k).copied().unwrap_or(0.0)));
            v.push(format!("{:.1}", 100.0 * r.func.get(k).copied().unwrap_or(0.0)));
        }
        v
    };
    for (c, r) in &summary.categories {
        rows.push(row(c, r));
    }
    rows.push(row("overall", &summary.overall));
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    format!("{c:<w$}", w = widths[i])
                } else {
                    format!("{c:>w$}", w = widths[i])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

#[derive(Deserialize)]
struct VerilogEvalRow {
    task_id: String,
    #[serde(default)]
    detail_description: Option<String>,
    #[serde(default)]
    prompt: Option<String>,
    test: String,
    #[serde(default)]
    canonical_solution: Option<String>,
}

/// Converts a VerilogEval-style JSONL file (`task_id`, `detail_description`
/// or `prompt`, `test`) to tasks judged by the external testbench. A
/// `canonical_solution` is appended to the testbench when present, since
/// those testbenches instantiate the reference module.
pub fn import_verilogeval(path: &Path) -> Result<Vec<BenchmarkTask>, EvalError> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: VerilogEvalRow =
            serde_json::from_str(line).map_err(|e| EvalError::Import(format!("{}:{}: {e}", path.display(), i + 1)))?;
        let problem = row.detail_description.or(row.prompt).ok_or_else(|| {
            EvalError::Import(format!("{}: task `{}` has no description", path.display(), row.task_id))
        })?;
        let mut source = row.test;
        if let Some(r) = row.canonical_solution {
            source.push('\n');
            source.push_str(&r);
        }
        out.push(BenchmarkTask {
            id: row.task_id,
            problem,
            judge: Judge::Testbench(TestbenchSpec::Verilog { source }),
            category: "verilogeval".into(),
        });
    }
    Ok(out)
}

/// Converts an RTLLM-style tree: every directory holding
/// `design_description.txt` and `testbench.v` becomes a task named after the
/// directory, categorised by its parent directory.
pub fn import_rtllm(root: &Path) -> Result<Vec<BenchmarkTask>, EvalError> {
    let mut out = Vec::new();
    let walker = WalkDir::new(root).follow_links(false).sort_by_file_name();
    for entry in walker {
        let entry = entry.map_err(|e| EvalError::Import(e.to_string()))?;
        if !entry.file_type().is_file() || entry.file_name() != "design_description.txt" {
            continue;
        }
        let dir = entry.path().parent().expect("file has a parent");
        let tb = dir.join("testbench.v");
        if !tb.is_file() {
            log::warn!("{}: no testbench.v, skipped", dir.display());
            continue;
        }
        let id = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let category = dir
            .parent()
            .filter(|p| *p != root && p.starts_with(root))
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.push(BenchmarkTask {
            id,
            problem: fs::read_to_string(entry.path())?,
            judge: Judge::Testbench(TestbenchSpec::Verilog {
                source: fs::read_to_string(&tb)?,
            }),
            category,
        });
    }
    Ok(out)
}

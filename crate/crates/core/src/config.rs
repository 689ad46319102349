//! The single experiment config file: TOML with `${VAR}` environment
//! interpolation, paths relative to the file, and validation that names
//! the offending field.

use std::env;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbedderConfig;
use crate::gateway::GatewayConfig;
use crate::judge::JudgeConfig;
use crate::rag::{PromptConfig, RetrieverConfig, DEFAULT_BUDGET_CHARS, DEFAULT_K_EXAMPLE, DEFAULT_K_KNOWLEDGE};
use crate::scorer::{ScorerConfig, DEFAULT_THRESHOLD};
use crate::util::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted path of the offending field, e.g. `paths.corpus`.
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config field `{}`: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn default_run_dir() -> PathBuf {
    PathBuf::from("runs/default")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: PathBuf,
    /// Knowledge document roots (`.md` and `.txt` files).
    #[serde(default)]
    pub docs: Vec<PathBuf>,
    #[serde(default = "default_run_dir")]
    pub run_dir: PathBuf,
    /// Benchmark tasks for `eval`.
    #[serde(default)]
    pub tasks: Option<PathBuf>,
    /// Problems for pair mining; accepted synthetic pairs when absent.
    #[serde(default)]
    pub mine_tasks: Option<PathBuf>,
    /// Problem-type list for synthesis; the built-in list when absent.
    #[serde(default)]
    pub problem_types: Option<PathBuf>,
    #[serde(default)]
    pub extensions: Option<Vec<String>>,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_temperature() -> f64 {
    0.8
}
fn default_top_p() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreStageConfig {
    /// Keep chunks scoring strictly above this.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Chunks sent to the LLM for labels; 0 means all.
    #[serde(default)]
    pub label_count: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default)]
    pub model: ScorerConfig,
}

impl Default for ScoreStageConfig {
    fn default() -> Self {
        ScoreStageConfig {
            threshold: DEFAULT_THRESHOLD,
            label_count: 0,
            temperature: default_temperature(),
            top_p: default_top_p(),
            model: ScorerConfig::default(),
        }
    }
}

fn default_count() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            count: default_count(),
            temperature: default_temperature(),
            top_p: default_top_p(),
        }
    }
}

fn default_k_example() -> usize {
    DEFAULT_K_EXAMPLE
}
fn default_k_knowledge() -> usize {
    DEFAULT_K_KNOWLEDGE
}
fn default_budget() -> usize {
    DEFAULT_BUDGET_CHARS
}
fn default_chunk_chars() -> usize {
    1500
}
fn default_candidates() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RagStageConfig {
    #[serde(default = "default_k_example")]
    pub k_example: usize,
    #[serde(default = "default_k_knowledge")]
    pub k_knowledge: usize,
    #[serde(default = "default_budget")]
    pub budget_chars: usize,
    /// Target size of knowledge chunks.
    #[serde(default = "default_chunk_chars")]
    pub chunk_chars: usize,
    #[serde(default = "default_candidates")]
    pub candidates_per_problem: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default)]
    pub retriever: RetrieverConfig,
}

impl Default for RagStageConfig {
    fn default() -> Self {
        RagStageConfig {
            k_example: DEFAULT_K_EXAMPLE,
            k_knowledge: DEFAULT_K_KNOWLEDGE,
            budget_chars: DEFAULT_BUDGET_CHARS,
            chunk_chars: default_chunk_chars(),
            candidates_per_problem: default_candidates(),
            temperature: default_temperature(),
            top_p: default_top_p(),
            retriever: RetrieverConfig::default(),
        }
    }
}

impl RagStageConfig {
    pub fn prompt(&self) -> PromptConfig {
        PromptConfig {
            k_example: self.k_example,
            k_knowledge: self.k_knowledge,
            budget_chars: self.budget_chars,
        }
    }
}

fn default_n() -> u64 {
    10
}
fn default_ks() -> Vec<u64> {
    vec![1, 5]
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalStageConfig {
    #[serde(default = "default_n")]
    pub n: u64,
    #[serde(default = "default_ks")]
    pub ks: Vec<u64>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    /// Augment prompts with the trained retrievers when they exist.
    #[serde(default = "default_true")]
    pub use_rag: bool,
}

impl Default for EvalStageConfig {
    fn default() -> Self {
        EvalStageConfig {
            n: default_n(),
            ks: default_ks(),
            temperature: default_temperature(),
            top_p: default_top_p(),
            use_rag: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub paths: PathsConfig,
    #[serde(default)]
    pub embedder: EmbedderConfig,
    #[serde(default)]
    pub gateway: GatewayConfig,
    #[serde(default)]
    pub scorer: ScoreStageConfig,
    #[serde(default)]
    pub synth: SynthConfig,
    /// Judge settings shared by the code filter, mining and evaluation.
    #[serde(default)]
    pub filter: JudgeConfig,
    #[serde(default)]
    pub rag: RagStageConfig,
    #[serde(default)]
    pub eval: EvalStageConfig,
}

fn var_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\$\$\{|\$\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap())
}

/// Replaces `${NAME}` with the environment variable `NAME`; `$${` is a
/// literal `${`. An unset variable is an error naming it.
pub fn interpolate(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String, ConfigError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for c in var_re().captures_iter(text) {
        let m = c.get(0).unwrap();
        out.push_str(&text[last..m.start()]);
        match c.get(1) {
            None => out.push_str("${"),
            Some(name) => {
                let v = lookup(name.as_str()).ok_or_else(|| {
                    let line = text[..m.start()].matches('\n').count() + 1;
                    ConfigError::new(
                        "",
                        format!("line {line}: environment variable `{}` is not set", name.as_str()),
                    )
                })?;
                out.push_str(&v);
            }
        }
        last = m.end();
    }
    out.push_str(&text[last..]);
    Ok(out)
}

/// A parsed config plus where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    /// Directory relative paths were resolved against.
    pub base_dir: PathBuf,
    /// Hash of the config as written (after interpolation and overrides,
    /// before path resolution, without `paths.run_dir`).
    pub hash: String,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<PipelineConfig, ConfigError> {
        let text = interpolate(text, |k| env::var(k).ok())?;
        toml::from_str(&text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.starts_with("unknown field") || msg.starts_with("missing field"))
                .unwrap_or("")
                .to_string();
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            match line {
                Some(l) => ConfigError::new(field, format!("line {l}: {msg}")),
                None => ConfigError::new(field, msg),
            }
        })
    }

    /// Hash over everything that shapes outputs.
    pub fn content_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(p) = v.get_mut("paths").and_then(|p| p.as_object_mut()) {
            p.remove("run_dir");
        }
        sha256_hex(v.to_string().as_bytes())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        resolve(base, &mut p.corpus);
        p.docs.iter_mut().for_each(|d| resolve(base, d));
        resolve(base, &mut p.run_dir);
        for o in [&mut p.tasks, &mut p.mine_tasks, &mut p.problem_types] {
            if let Some(x) = o {
                resolve(base, x);
            }
        }
        for o in [
            &mut self.gateway.cassette,
            &mut self.gateway.mock.script,
            &mut self.embedder.cassette,
        ] {
            if let Some(x) = o {
                resolve(base, x);
            }
        }
        if let Some(w) = &mut self.filter.sim.work_dir {
            resolve(base, w);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.paths;
        if !p.corpus.is_dir() {
            return Err(ConfigError::new(
                "paths.corpus",
                format!("{} is not a directory", p.corpus.display()),
            ));
        }
        for (i, d) in p.docs.iter().enumerate() {
            if !d.is_dir() {
                return Err(ConfigError::new(
                    format!("paths.docs[{i}]"),
                    format!("{} is not a directory", d.display()),
                ));
            }
        }
        for (name, o) in [
            ("paths.tasks", &p.tasks),
            ("paths.mine_tasks", &p.mine_tasks),
            ("paths.problem_types", &p.problem_types),
        ] {
            if let Some(f) = o {
                if !f.is_file() {
                    return Err(ConfigError::new(name, format!("{} does not exist", f.display())));
                }
            }
        }
        if let Some(s) = &self.gateway.mock.script {
            if !s.is_file() {
                return Err(ConfigError::new(
                    "gateway.mock.script",
                    format!("{} does not exist", s.display()),
                ));
            }
        }
        self.gateway
            .validate()
            .map_err(|e| ConfigError::new("gateway", e.to_string()))?;
        self.embedder
            .validate()
            .map_err(|e| ConfigError::new("embedder", e.to_string()))?;
        if !(0.0..=10.0).contains(&self.scorer.threshold) {
            return Err(ConfigError::new("scorer.threshold", "must be within [0, 10]"));
        }
        for (name, t, tp) in [
            ("scorer", self.scorer.temperature, self.scorer.top_p),
            ("synth", self.synth.temperature, self.synth.top_p),
            ("rag", self.rag.temperature, self.rag.top_p),
            ("eval", self.eval.temperature, self.eval.top_p),
        ] {
            if !(t >= 0.0) {
                return Err(ConfigError::new(format!("{name}.temperature"), "must be >= 0"));
            }
            if !(tp > 0.0 && tp <= 1.0) {
                return Err(ConfigError::new(format!("{name}.top_p"), "must be in (0, 1]"));
            }
        }
        if self.eval.n == 0 {
            return Err(ConfigError::new("eval.n", "must be positive"));
        }
        if let Some(k) = self.eval.ks.iter().find(|k| **k == 0 || **k > self.eval.n) {
            return Err(ConfigError::new(
                "eval.ks",
                format!("k={k} outside 1..={}", self.eval.n),
            ));
        }
        self.rag
            .retriever
            .validate()
            .map_err(|e| ConfigError::new("rag.retriever", e.to_string()))?;
        Ok(())
    }
}

/// Overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub run_dir: Option<PathBuf>,
    pub threshold: Option<f64>,
}

/// Reads, interpolates, applies overrides, hashes, resolves paths and
/// validates. A `run_dir` override is taken as given (relative to the
/// current directory), not relative to the config file.
pub fn load_config(path: &Path, ov: &Overrides) -> Result<LoadedConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::new("", format!("{}: {e}", path.display())))?;
    let mut config = PipelineConfig::parse(&text)?;
    if let Some(s) = ov.seed {
        config.seed = s;
    }
    if let Some(t) = ov.threshold {
        config.scorer.threshold = t;
    }
    let hash = config.content_hash();
    let base_dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    config.resolve_paths(&base_dir);
    if let Some(r) = &ov.run_dir {
        config.paths.run_dir = r.clone();
    }
    config.validate()?;
    Ok(LoadedConfig { config, base_dir, hash })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(k: &str) -> Option<String> {
        match k {
            "KEY" => Some("s3cret".into()),
            "DIR" => Some("/data".into()),
            _ => None,
        }
    }

    #[test]
    fn interpolation() {
        assert_eq!(interpolate("a = \"${KEY}\"", env).unwrap(), "a = \"s3cret\"");
        assert_eq!(interpolate("${DIR}/x ${DIR}", env).unwrap(), "/data/x /data");
        assert_eq!(interpolate("lit $${KEY}", env).unwrap(), "lit ${KEY}");
        assert_eq!(interpolate("no vars $HOME", env).unwrap(), "no vars $HOME");
        let e = interpolate("a = 1\nb = \"${MISSING}\"", env).unwrap_err();
        assert!(e.message.contains("MISSING") && e.message.contains("line 2"));
    }

    #[test]
    fn defaults_fill_in() {
        let c = PipelineConfig::parse("[paths]\ncorpus = \"c\"\n").unwrap();
        assert_eq!(c.eval.n, 10);
        assert_eq!(c.eval.ks, [1, 5]);
        assert_eq!((c.eval.temperature, c.eval.top_p), (0.8, 0.95));
        assert_eq!((c.rag.k_example, c.rag.k_knowledge), (2, 3));
        assert_eq!(c.scorer.threshold, 6.5);
        assert_eq!(c.rag.retriever.epochs, 3);
        assert_eq!(c.rag.retriever.lr, 1e-5);
        assert_eq!(c.paths.run_dir, PathBuf::from("runs/default"));
    }

    #[test]
    fn unknown_and_missing_fields_are_named() {
        let e = PipelineConfig::parse("[paths]\ncorpus = \"c\"\n[eval]\nnn = 3\n").unwrap_err();
        assert_eq!(e.field, "nn");
        let e = PipelineConfig::parse("seed = 1\n").unwrap_err();
        assert_eq!(e.field, "paths");
    }

    #[test]
    fn missing_corpus_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(&p, "[paths]\ncorpus = \"nope\"\n").unwrap();
        let e = load_config(&p, &Overrides::default()).unwrap_err();
        assert_eq!(e.field, "paths.corpus");
        assert!(e.to_string().contains("paths.corpus"));
    }

    #[test]
    fn paths_resolve_against_the_file_and_hash_ignores_run_dir() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("corpus")).unwrap();
        let p = dir.path().join("c.toml");
        fs::write(&p, "seed = 3\n[paths]\ncorpus = \"corpus\"\nrun_dir = \"out\"\n").unwrap();
        let a = load_config(&p, &Overrides::default()).unwrap();
        assert_eq!(a.config.paths.corpus, dir.path().join("corpus"));
        assert_eq!(a.config.paths.run_dir, dir.path().join("out"));
        let b = load_config(
            &p,
            &Overrides {
                run_dir: Some("elsewhere".into()),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(b.config.paths.run_dir, PathBuf::from("elsewhere"));
        assert_eq!(a.hash, b.hash);
        let c = load_config(
            &p,
            &Overrides {
                seed: Some(4),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(c.config.seed, 4);
        assert_ne!(a.hash, c.hash);
    }

    #[test]
    fn bad_ks_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("c")).unwrap();
        let p = dir.path().join("c.toml");
        fs::write(&p, "[paths]\ncorpus = \"c\"\n[eval]\nn = 4\nks = [1, 5]\n").unwrap();
        assert_eq!(load_config(&p, &Overrides::default()).unwrap_err().field, "eval.ks");
    }
}

//! Unit-norm sentence embeddings from a frozen base embedder.

use std::hash::Hasher;
use std::path::PathBuf;
use std::sync::Arc;

use fnv::FnvHasher;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::gateway::{Cassette, ChatRequest, GatewayError, HttpClient, HttpSettings, Message};
use crate::util::sha256_hex;

pub type EmbeddingVector = Vec<f64>;

pub const DEFAULT_DIM: usize = 768;
const LOCAL_SEED: &[u8] = b"vcoder-local-hash/v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("embedding provider error ({status}): {body}")]
    ProviderError { status: u16, body: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("embedder configuration: {0}")]
    Config(String),
    #[error("embedding transport: {0}")]
    Transport(String),
    #[error("no cassette entry for key {0}")]
    CassetteMiss(String),
}

impl From<GatewayError> for EmbedError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::Http { status, body } | GatewayError::AuthError { status, body } => {
                EmbedError::ProviderError { status, body }
            }
            GatewayError::RateLimited { attempts } => EmbedError::ProviderError {
                status: 429,
                body: format!("rate limited after {attempts} attempts"),
            },
            GatewayError::CassetteMiss(k) => EmbedError::CassetteMiss(k),
            GatewayError::Config(m) | GatewayError::InvalidRequest(m) => EmbedError::Config(m),
            other => EmbedError::Transport(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    Remote,
    #[default]
    LocalHash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CassetteMode {
    #[default]
    Off,
    Record,
    Replay,
}

fn default_dim() -> usize {
    DEFAULT_DIM
}
fn default_batch() -> usize {
    32
}
fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedderConfig {
    #[serde(default)]
    pub provider: Provider,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(flatten)]
    pub http: HttpSettings,
    #[serde(default)]
    pub cassette: Option<PathBuf>,
    #[serde(default)]
    pub cassette_mode: CassetteMode,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig {
            provider: Provider::LocalHash,
            endpoint: None,
            model: None,
            dim: DEFAULT_DIM,
            api_key_env: default_key_env(),
            batch_size: default_batch(),
            http: HttpSettings::default(),
            cassette: None,
            cassette_mode: CassetteMode::Off,
        }
    }
}

impl EmbedderConfig {
    pub fn local(dim: usize) -> Self {
        EmbedderConfig {
            dim,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim == 0 {
            return Err(EmbedError::Config("dim must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(EmbedError::Config("batch_size must be positive".into()));
        }
        if self.provider == Provider::Remote && (self.endpoint.is_none() || self.model.is_none()) {
            return Err(EmbedError::Config("remote provider requires endpoint and model".into()));
        }
        if self.cassette_mode != CassetteMode::Off && self.cassette.is_none() {
            return Err(EmbedError::Config("cassette_mode requires a cassette path".into()));
        }
        self.http.validate()?;
        Ok(())
    }
}

/// A base embedder. Implementations need not normalize; [`embed`] does.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

/// Signed character 3-gram hashing into `dim` buckets.
#[derive(Debug, Clone, Copy)]
pub struct LocalHashEmbedder {
    dim: usize,
}

impl LocalHashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dim must be positive");
        LocalHashEmbedder { dim }
    }

    pub fn vector(&self, text: &str) -> EmbeddingVector {
        let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
        let padded: Vec<char> = std::iter::once('\u{2}')
            .chain(collapsed.chars())
            .chain(std::iter::once('\u{3}'))
            .collect();
        let mut v = vec![0.0; self.dim];
        let mut add = |gram: &[char]| {
            let s: String = gram.iter().collect();
            let mut h = FnvHasher::default();
            h.write(LOCAL_SEED);
            h.write(s.as_bytes());
            let x = h.finish();
            let sign = if x >> 63 == 1 { -1.0 } else { 1.0 };
            v[(x % self.dim as u64) as usize] += sign;
        };
        if padded.len() < 3 {
            add(&padded);
        } else {
            padded.windows(3).for_each(&mut add);
        }
        v
    }
}

impl Embedder for LocalHashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// OpenAI-compatible `/embeddings` client with optional cassette.
pub struct RemoteEmbedder {
    client: Option<HttpClient>,
    url: String,
    model: String,
    dim: usize,
    api_key: Option<String>,
    cassette: Option<(Cassette, CassetteMode)>,
}

impl RemoteEmbedder {
    pub fn new(cfg: &EmbedderConfig) -> Result<Self, EmbedError> {
        cfg.validate()?;
        let endpoint = cfg.endpoint.clone().unwrap_or_default();
        let cassette = match (&cfg.cassette, cfg.cassette_mode) {
            (Some(p), m) if m != CassetteMode::Off => Some((Cassette::open(p)?, m)),
            _ => None,
        };
        let replay = matches!(cassette, Some((_, CassetteMode::Replay)));
        Ok(RemoteEmbedder {
            client: if replay {
                None
            } else {
                Some(HttpClient::new(&cfg.http)?)
            },
            url: format!("{}/embeddings", endpoint.trim_end_matches('/')),
            model: cfg.model.clone().unwrap_or_default(),
            dim: cfg.dim,
            api_key: std::env::var(&cfg.api_key_env).ok(),
            cassette,
        })
    }

    fn key(&self, text: &str) -> String {
        sha256_hex(format!("{}\0{}", self.model, text).as_bytes())
    }

    fn fetch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let client = self
            .client
            .as_ref()
            .ok_or_else(|| EmbedError::Config("no HTTP client in replay mode".into()))?;
        let body = json!({ "model": self.model, "input": texts });
        let resp = client.post_json(&self.url, self.api_key.as_deref(), &body)?;
        let data = resp["data"]
            .as_array()
            .ok_or_else(|| EmbedError::Transport("response has no data array".into()))?;
        if data.len() != texts.len() {
            return Err(EmbedError::Transport(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                data.len()
            )));
        }
        let mut items: Vec<(usize, EmbeddingVector)> = Vec::with_capacity(data.len());
        for (pos, item) in data.iter().enumerate() {
            let idx = item["index"].as_u64().map_or(pos, |i| i as usize);
            let v: EmbeddingVector = serde_json::from_value(item["embedding"].clone())
                .map_err(|e| EmbedError::Transport(format!("bad embedding: {e}")))?;
            items.push((idx, v));
        }
        items.sort_by_key(|(i, _)| *i);
        Ok(items.into_iter().map(|(_, v)| v).collect())
    }
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let Some((cassette, mode)) = &self.cassette else {
            return self.fetch(texts);
        };
        let mut out: Vec<Option<EmbeddingVector>> = texts
            .iter()
            .map(|t| cassette.get(&self.key(t)).and_then(|s| serde_json::from_str(&s).ok()))
            .collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            if *mode == CassetteMode::Replay {
                return Err(EmbedError::CassetteMiss(self.key(&texts[missing[0]])));
            }
            let batch: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let fetched = self.fetch(&batch)?;
            for (&i, v) in missing.iter().zip(fetched) {
                let req = ChatRequest::new("embed", vec![Message::user(texts[i].clone())]);
                let reply = serde_json::to_string(&v).expect("floats serialize");
                cassette.record(&self.key(&texts[i]), &req, &reply)?;
                out[i] = Some(v);
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled")).collect())
    }
}

pub fn build_embedder(cfg: &EmbedderConfig) -> Result<Arc<dyn Embedder>, EmbedError> {
    cfg.validate()?;
    Ok(match cfg.provider {
        Provider::LocalHash => Arc::new(LocalHashEmbedder::new(cfg.dim)),
        Provider::Remote => Arc::new(RemoteEmbedder::new(cfg)?),
    })
}

/// Scales `v` to unit length. A zero vector becomes the first basis vector.
pub fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        v.iter_mut().for_each(|x| *x /= norm);
    } else if !v.is_empty() {
        v.iter_mut().for_each(|x| *x = 0.0);
        v[0] = 1.0;
    }
}

/// Embeds `texts` in order, batched, with every result unit-normalized.
pub fn embed(texts: &[String], embedder: &dyn Embedder, batch_size: usize) -> Result<Vec<EmbeddingVector>, EmbedError> {
    let dim = embedder.dim();
    let batches: Vec<Vec<EmbeddingVector>> = texts
        .par_chunks(batch_size.max(1))
        .map(|chunk| {
            let vs = embedder.embed_batch(chunk)?;
            if vs.len() != chunk.len() {
                return Err(EmbedError::Transport(format!(
                    "provider returned {} vectors for {} texts",
                    vs.len(),
                    chunk.len()
                )));
            }
            vs.into_iter()
                .map(|mut v| {
                    if v.len() != dim {
                        return Err(EmbedError::DimMismatch {
                            expected: dim,
                            got: v.len(),
                        });
                    }
                    normalize(&mut v);
                    Ok(v)
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    Ok(batches.into_iter().flatten().collect())
}

/// Convenience wrapper building the embedder from config.
pub fn embed_with(texts: &[String], cfg: &EmbedderConfig) -> Result<Vec<EmbeddingVector>, EmbedError> {
    let e = build_embedder(cfg)?;
    embed(texts, e.as_ref(), cfg.batch_size)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity, clamped to [-1, 1]. Zero vectors give 0.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, EmbedError> {
    if a.len() != b.len() {
        return Err(EmbedError::DimMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn local(texts: &[&str]) -> Vec<EmbeddingVector> {
        let t: Vec<String> = texts.iter().map(|s| s.to_string()).collect();
        embed_with(&t, &EmbedderConfig::local(DEFAULT_DIM)).unwrap()
    }

    #[test]
    fn deterministic_and_unit() {
        let a = local(&["x", "", "module m; endmodule"]);
        let b = local(&["x", "", "module m; endmodule"]);
        assert_eq!(a, b);
        for v in &a {
            assert!((dot(v, v).sqrt() - 1.0).abs() < 1e-6);
            assert_eq!(v.len(), DEFAULT_DIM);
        }
    }

    #[test]
    fn similar_code_is_closer() {
        let v = local(&["assign y = a & b", "assign y = a & b;", "always @(posedge clk) q <= d"]);
        let near = cosine(&v[0], &v[1]).unwrap();
        let far = cosine(&v[0], &v[2]).unwrap();
        assert!(near > far, "{near} <= {far}");
    }

    #[test]
    fn whitespace_is_collapsed() {
        let v = local(&["a  +\n b", "a + b"]);
        assert_eq!(v[0], v[1]);
    }

    #[test]
    fn cosine_basics() {
        let v = local(&["wire w;"]).remove(0);
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-9);
        assert!((cosine(&v, &neg).unwrap() + 1.0).abs() < 1e-9);
        assert!(matches!(cosine(&v, &v[..3]), Err(EmbedError::DimMismatch { .. })));
    }

    #[test]
    fn order_preserved_across_batches() {
        let texts: Vec<String> = (0..70).map(|i| format!("text {i}")).collect();
        let e = LocalHashEmbedder::new(64);
        let batched = embed(&texts, &e, 8).unwrap();
        let single = embed(&texts, &e, 1000).unwrap();
        assert_eq!(batched, single);
    }

    struct WrongDim;
    impl Embedder for WrongDim {
        fn dim(&self) -> usize {
            4
        }
        fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
            Ok(texts.iter().map(|_| vec![1.0; 3]).collect())
        }
    }

    #[test]
    fn dim_mismatch_detected() {
        let r = embed(&["a".to_string()], &WrongDim, 4);
        assert_eq!(r, Err(EmbedError::DimMismatch { expected: 4, got: 3 }));
    }

    #[test]
    fn remote_needs_endpoint() {
        let cfg = EmbedderConfig {
            provider: Provider::Remote,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(EmbedError::Config(_))));
    }
}

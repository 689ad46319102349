//! The only path to LLM and embedding services: an OpenAI-compatible HTTP
//! client, a seeded mock, and record/replay cassettes.

mod cassette;
mod http;
mod mock;
mod ratelimit;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub use cassette::Cassette;
pub use http::{HttpClient, HttpSettings};
pub use mock::{MockConfig, MockGateway, MockRule, Replies, Select};
pub use ratelimit::{RateLimiter, Semaphore};

use crate::util::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub top_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    /// Free-form label used for cassette keys and mock rule matching.
    pub tag: String,
}

impl ChatRequest {
    pub fn new(tag: impl Into<String>, messages: Vec<Message>) -> Self {
        ChatRequest {
            messages,
            temperature: 0.8,
            top_p: 0.95,
            max_tokens: None,
            tag: tag.into(),
        }
    }

    pub fn with_sampling(mut self, temperature: f64, top_p: f64) -> Self {
        self.temperature = temperature;
        self.top_p = top_p;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(self.temperature >= 0.0) {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(GatewayError::InvalidRequest(format!(
                "top_p must be in (0, 1], got {}",
                self.top_p
            )));
        }
        Ok(())
    }

    /// Text of the last user message.
    pub fn last_user(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}

/// Canonical text of the messages: a JSON array of `[role, content]` pairs.
pub fn canonical_messages(messages: &[Message]) -> String {
    let pairs: Vec<[&str; 2]> = messages.iter().map(|m| [m.role.as_str(), m.content.as_str()]).collect();
    serde_json::to_string(&pairs).expect("strings serialize")
}

/// Cassette key: SHA-256 over the tag and canonical messages. Sampling
/// parameters are deliberately excluded.
pub fn cassette_key(req: &ChatRequest) -> String {
    let mut data = req.tag.clone().into_bytes();
    data.push(0);
    data.extend_from_slice(canonical_messages(&req.messages).as_bytes());
    sha256_hex(&data)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("no cassette entry for key {0}")]
    CassetteMiss(String),
    #[error("authentication failed ({status}): {body}")]
    AuthError { status: u16, body: String },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    BadResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("gateway configuration: {0}")]
    Config(String),
    #[error("cassette I/O: {0}")]
    Io(String),
    #[error("no mock rule matches tag `{0}`")]
    NoMockRule(String),
}

/// Blocking chat-completion interface shared by every stage.
pub trait LlmGateway: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError>;
}

impl<T: LlmGateway + ?Sized> LlmGateway for Arc<T> {
    fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        (**self).complete(req)
    }
}

impl<T: LlmGateway + ?Sized> LlmGateway for Box<T> {
    fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        (**self).complete(req)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatewayMode {
    Remote,
    #[default]
    Mock,
    Replay,
    Record,
}

fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    #[serde(default)]
    pub mode: GatewayMode,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(flatten)]
    pub http: HttpSettings,
    #[serde(default)]
    pub cassette: Option<PathBuf>,
    #[serde(default)]
    pub mock: MockConfig,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            mode: GatewayMode::Mock,
            endpoint: None,
            model: None,
            api_key_env: default_api_key_env(),
            http: HttpSettings::default(),
            cassette: None,
            mock: MockConfig::default(),
        }
    }
}

impl GatewayConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        match self.mode {
            GatewayMode::Remote | GatewayMode::Record => {
                if self.endpoint.is_none() {
                    return Err(GatewayError::Config("endpoint is required for remote/record".into()));
                }
                if self.model.is_none() {
                    return Err(GatewayError::Config("model is required for remote/record".into()));
                }
                if self.mode == GatewayMode::Record && self.cassette.is_none() {
                    return Err(GatewayError::Config("cassette is required for record".into()));
                }
            }
            GatewayMode::Replay => {
                if self.cassette.is_none() {
                    return Err(GatewayError::Config("cassette is required for replay".into()));
                }
            }
            GatewayMode::Mock => {}
        }
        self.http.validate()
    }
}

/// OpenAI-compatible `/chat/completions` client.
pub struct RemoteGateway {
    client: HttpClient,
    url: String,
    model: String,
    api_key: Option<String>,
}

impl RemoteGateway {
    pub fn new(cfg: &GatewayConfig) -> Result<Self, GatewayError> {
        let endpoint = cfg
            .endpoint
            .clone()
            .ok_or_else(|| GatewayError::Config("endpoint is required".into()))?;
        Ok(RemoteGateway {
            client: HttpClient::new(&cfg.http)?,
            url: format!("{}/chat/completions", endpoint.trim_end_matches('/')),
            model: cfg
                .model
                .clone()
                .ok_or_else(|| GatewayError::Config("model is required".into()))?,
            api_key: std::env::var(&cfg.api_key_env).ok(),
        })
    }
}

impl LlmGateway for RemoteGateway {
    fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        req.validate()?;
        let mut body = json!({
            "model": self.model,
            "messages": req.messages,
            "temperature": req.temperature,
            "top_p": req.top_p,
        });
        if let Some(m) = req.max_tokens {
            body["max_tokens"] = json!(m);
        }
        let resp = self.client.post_json(&self.url, self.api_key.as_deref(), &body)?;
        resp["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| GatewayError::BadResponse("missing choices[0].message.content".into()))
    }
}

/// Remote calls with every reply appended to a cassette.
pub struct RecordingGateway {
    inner: RemoteGateway,
    cassette: Cassette,
}

impl LlmGateway for RecordingGateway {
    fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        let reply = self.inner.complete(req)?;
        self.cassette.record(&cassette_key(req), req, &reply)?;
        Ok(reply)
    }
}

/// Exact-key lookups in a cassette; never touches the network.
pub struct ReplayGateway {
    cassette: Cassette,
}

impl ReplayGateway {
    pub fn new(cassette: Cassette) -> Self {
        ReplayGateway { cassette }
    }
}

impl LlmGateway for ReplayGateway {
    fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        req.validate()?;
        let key = cassette_key(req);
        self.cassette.get(&key).ok_or(GatewayError::CassetteMiss(key))
    }
}

pub fn build_gateway(cfg: &GatewayConfig) -> Result<Arc<dyn LlmGateway>, GatewayError> {
    cfg.validate()?;
    Ok(match cfg.mode {
        GatewayMode::Remote => Arc::new(RemoteGateway::new(cfg)?),
        GatewayMode::Mock => Arc::new(MockGateway::new(cfg.mock.clone())?),
        GatewayMode::Replay => Arc::new(ReplayGateway::new(Cassette::open(cfg.cassette.as_ref().unwrap())?)),
        GatewayMode::Record => Arc::new(RecordingGateway {
            inner: RemoteGateway::new(cfg)?,
            cassette: Cassette::open(cfg.cassette.as_ref().unwrap())?,
        }),
    })
}

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ratelimit::{RateLimiter, Semaphore};
use super::GatewayError;

fn default_retries() -> u32 {
    5
}
fn default_backoff() -> u64 {
    500
}
fn default_rate() -> f64 {
    2.0
}
fn default_concurrency() -> usize {
    4
}
fn default_timeout() -> u64 {
    120
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpSettings {
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_base_ms: u64,
    /// Requests per second; 0 disables limiting.
    #[serde(default = "default_rate")]
    pub rate_limit: f64,
    #[serde(default = "default_concurrency")]
    pub max_concurrent: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

impl Default for HttpSettings {
    fn default() -> Self {
        HttpSettings {
            max_retries: default_retries(),
            backoff_base_ms: default_backoff(),
            rate_limit: default_rate(),
            max_concurrent: default_concurrency(),
            timeout_secs: default_timeout(),
        }
    }
}

impl HttpSettings {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.rate_limit < 0.0 || !self.rate_limit.is_finite() {
            return Err(GatewayError::Config("rate_limit must be >= 0".into()));
        }
        if self.max_concurrent == 0 {
            return Err(GatewayError::Config("max_concurrent must be >= 1".into()));
        }
        Ok(())
    }
}

/// JSON-over-HTTP POST with rate limiting, a concurrency cap and
/// exponential backoff on 429 and 5xx.
pub struct HttpClient {
    client: reqwest::blocking::Client,
    settings: HttpSettings,
    limiter: RateLimiter,
    slots: Semaphore,
}

impl HttpClient {
    pub fn new(settings: &HttpSettings) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(settings.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(HttpClient {
            client,
            limiter: RateLimiter::new(settings.rate_limit),
            slots: Semaphore::new(settings.max_concurrent),
            settings: settings.clone(),
        })
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self
            .settings
            .backoff_base_ms
            .saturating_mul(1u64 << attempt.min(16))
            .min(30_000);
        Duration::from_millis(ms)
    }

    pub fn post_json(&self, url: &str, api_key: Option<&str>, body: &Value) -> Result<Value, GatewayError> {
        let _slot = self.slots.acquire();
        let attempts = self.settings.max_retries + 1;
        let mut last = GatewayError::Transport("no attempt made".into());
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff(attempt - 1));
            }
            self.limiter.acquire();
            let mut rb = self.client.post(url).json(body);
            if let Some(k) = api_key {
                rb = rb.bearer_auth(k);
            }
            let resp = match rb.send() {
                Ok(r) => r,
                Err(e) => {
                    last = GatewayError::Transport(e.to_string());
                    continue;
                }
            };
            let status = resp.status().as_u16();
            let text = resp.text().unwrap_or_default();
            match status {
                200..=299 => return serde_json::from_str(&text).map_err(|e| GatewayError::BadResponse(e.to_string())),
                401 | 403 => return Err(GatewayError::AuthError { status, body: text }),
                429 => last = GatewayError::RateLimited { attempts },
                500..=599 => last = GatewayError::Http { status, body: text },
                _ => return Err(GatewayError::Http { status, body: text }),
            }
            log::warn!("POST {url}: status {status}, attempt {}/{attempts}", attempt + 1);
        }
        Err(last)
    }
}

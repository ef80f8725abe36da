//! Completion endpoint client: one POST per prompt, retries with
//! exponential backoff, a JSONL request log, and a rate-limited batch
//! runner.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("environment variable {0} holding the API key is not set")]
    MissingKey(String),
    #[error("invalid endpoint configuration: {0}")]
    InvalidConfig(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("unexpected response shape: {0}")]
    MalformedResponse(String),
    #[error("request log {}: {source}", path.display())]
    Log {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl LlmError {
    /// Failures caused by the remote service rather than local setup.
    pub fn is_external(&self) -> bool {
        matches!(
            self,
            LlmError::Status { .. }
                | LlmError::RetriesExhausted { .. }
                | LlmError::MalformedResponse(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmEndpointConfig {
    /// Full URL the request is POSTed to.
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub api_key_env: String,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    /// Token-bucket refill rate; 0 disables rate limiting.
    pub requests_per_second: f64,
    pub log_path: Option<PathBuf>,
}

impl Default for LlmEndpointConfig {
    fn default() -> Self {
        LlmEndpointConfig {
            base_url: "http://127.0.0.1:8000/v1/completions".into(),
            model: "gpt-3.5-turbo-instruct".into(),
            temperature: 0.0,
            max_tokens: 256,
            api_key_env: "LEXANALOGY_API_KEY".into(),
            max_attempts: 5,
            backoff_base_ms: 500,
            timeout_secs: 60,
            max_in_flight: 4,
            requests_per_second: 0.0,
            log_path: None,
        }
    }
}

impl LlmEndpointConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |m: &str| Err(LlmError::InvalidConfig(m.into()));
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be a finite value >= 0");
        }
        if self.max_attempts < 1 {
            return bad("max_attempts must be at least 1");
        }
        if self.max_in_flight < 1 {
            return bad("max_in_flight must be at least 1");
        }
        if !(self.requests_per_second >= 0.0 && self.requests_per_second.is_finite()) {
            return bad("requests_per_second must be a finite value >= 0");
        }
        if self.base_url.is_empty() || self.model.is_empty() {
            return bad("base_url and model are required");
        }
        Ok(())
    }

    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64 << (retry - 1).min(16);
        Duration::from_millis(self.backoff_base_ms.saturating_mul(factor))
    }
}

pub trait Completion: Sync {
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

pub struct HttpCompletion {
    config: LlmEndpointConfig,
    agent: ureq::Agent,
    key: String,
    log: Option<(PathBuf, Mutex<BufWriter<File>>)>,
}

impl HttpCompletion {
    /// Reads the API key and opens the log; fails before any network call
    /// when the key variable is unset.
    pub fn new(config: LlmEndpointConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let key = std::env::var(&config.api_key_env)
            .map_err(|_| LlmError::MissingKey(config.api_key_env.clone()))?;
        let log = match &config.log_path {
            Some(path) => {
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|source| LlmError::Log {
                        path: path.clone(),
                        source,
                    })?;
                Some((path.clone(), Mutex::new(BufWriter::new(file))))
            }
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .new_agent();
        Ok(HttpCompletion {
            config,
            agent,
            key,
            log,
        })
    }

    fn log(&self, mut entry: Value) -> Result<(), LlmError> {
        let Some((path, file)) = &self.log else {
            return Ok(());
        };
        entry["ts"] = chrono::Utc::now()
            .to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
            .into();
        let mut line = entry.to_string();
        if !self.key.is_empty() {
            line = line.replace(&self.key, "[REDACTED]");
        }
        let mut w = file.lock().unwrap_or_else(|e| e.into_inner());
        writeln!(w, "{line}")
            .and_then(|_| w.flush())
            .map_err(|source| LlmError::Log {
                path: path.clone(),
                source,
            })
    }

    fn attempt(&self, body: &Value) -> Result<(u16, String), String> {
        let mut response = self
            .agent
            .post(&self.config.base_url)
            .header("Authorization", format!("Bearer {}", self.key))
            .send_json(body)
            .map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())?;
        Ok((status, text))
    }
}

impl Completion for HttpCompletion {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let body = json!({
            "model": self.config.model,
            "prompt": prompt,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let mut last = String::new();
        for attempt in 1..=self.config.max_attempts {
            if attempt > 1 {
                thread::sleep(self.config.backoff(attempt - 1));
            }
            self.log(json!({"event": "request", "attempt": attempt, "body": body}))?;
            match self.attempt(&body) {
                Err(transport) => {
                    self.log(
                        json!({"event": "transport_error", "attempt": attempt, "error": transport}),
                    )?;
                    log::warn!("attempt {attempt}: {transport}");
                    last = transport;
                }
                Ok((status, text)) => {
                    self.log(json!({"event": "response", "attempt": attempt, "status": status, "body": text}))?;
                    if status == 429 {
                        log::warn!("attempt {attempt}: rate limited (HTTP 429)");
                        last = "HTTP 429".into();
                        continue;
                    }
                    if !(200..300).contains(&status) {
                        return Err(LlmError::Status { status, body: text });
                    }
                    return extract_text(&text);
                }
            }
        }
        Err(LlmError::RetriesExhausted {
            attempts: self.config.max_attempts,
            last,
        })
    }
}

/// Completion text from `choices[0].text`, `choices[0].message.content`,
/// or a top-level `text`.
pub fn extract_text(body: &str) -> Result<String, LlmError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    let choice = &v["choices"][0];
    let text = [&choice["text"], &choice["message"]["content"], &v["text"]]
        .into_iter()
        .find_map(|t| t.as_str())
        .map(str::to_string);
    text.ok_or_else(|| LlmError::MalformedResponse(truncate(body, 200)))
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

/// Token bucket with capacity 1: at most `rate` acquisitions per second.
pub struct RateLimiter {
    interval: Option<Duration>,
    next: Mutex<Instant>,
}

impl RateLimiter {
    pub fn new(requests_per_second: f64) -> Self {
        RateLimiter {
            interval: (requests_per_second > 0.0)
                .then(|| Duration::from_secs_f64(1.0 / requests_per_second)),
            next: Mutex::new(Instant::now()),
        }
    }

    pub fn acquire(&self) {
        let Some(interval) = self.interval else {
            return;
        };
        let wait = {
            let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + interval;
            slot - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

/// Completes every prompt with at most `max_in_flight` concurrent requests.
/// Results keep the order of `prompts`.
pub fn complete_all(
    client: &dyn Completion,
    prompts: &[String],
    max_in_flight: usize,
    limiter: &RateLimiter,
) -> Vec<Result<String, LlmError>> {
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<String, LlmError>>>> =
        prompts.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..max_in_flight.clamp(1, prompts.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= prompts.len() {
                    break;
                }
                limiter.acquire();
                let r = client.complete(&prompts[i]);
                *results[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(r);
            });
        }
    });
    results
        .into_iter()
        .map(|m| {
            m.into_inner()
                .unwrap_or_else(|e| e.into_inner())
                .expect("every prompt is completed")
        })
        .collect()
}

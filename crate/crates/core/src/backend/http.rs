//! Live OpenAI-compatible backend: POST {base_url}/chat/completions
//! with bearer auth, bounded concurrency, and retry with exponential
//! backoff on transient failures.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use rand::Rng;
use serde_json::json;

use super::{BackendConfig, BackendError, CallLog, ChatBackend, CompletionRequest};

/// What a transport attempt produced: an HTTP status and body.
#[derive(Debug, Clone)]
pub struct TransportReply {
    pub status: u16,
    pub body: String,
}

/// Transport-level failure, before any HTTP status exists.
#[derive(Debug, Clone)]
pub enum TransportFailure {
    Timeout,
    Connect(String),
}

impl std::fmt::Display for TransportFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransportFailure::Timeout => f.write_str("request timed out"),
            TransportFailure::Connect(msg) => write!(f, "transport: {msg}"),
        }
    }
}

/// The wire layer, separated so tests can instrument it.
pub trait Transport: Send + Sync {
    fn post_chat(
        &self,
        url: &str,
        bearer: &str,
        body: &serde_json::Value,
        timeout: Duration,
    ) -> Result<TransportReply, TransportFailure>;
}

struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl Transport for ReqwestTransport {
    fn post_chat(
        &self,
        url: &str,
        bearer: &str,
        body: &serde_json::Value,
        timeout: Duration,
    ) -> Result<TransportReply, TransportFailure> {
        let response = self
            .client
            .post(url)
            .bearer_auth(bearer)
            .json(body)
            .timeout(timeout)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    TransportFailure::Timeout
                } else {
                    TransportFailure::Connect(e.to_string())
                }
            })?;
        let status = response.status().as_u16();
        let body = response
            .text()
            .map_err(|e| TransportFailure::Connect(e.to_string()))?;
        Ok(TransportReply { status, body })
    }
}

/// Counting semaphore gating in-flight requests.
struct Gate {
    slots: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn new(slots: usize) -> Self {
        Gate { slots: Mutex::new(slots), freed: Condvar::new() }
    }

    fn acquire(&self) -> GatePermit<'_> {
        let mut slots = self.slots.lock().unwrap();
        while *slots == 0 {
            slots = self.freed.wait(slots).unwrap();
        }
        *slots -= 1;
        GatePermit { gate: self }
    }

    fn release(&self) {
        *self.slots.lock().unwrap() += 1;
        self.freed.notify_one();
    }
}

struct GatePermit<'a> {
    gate: &'a Gate,
}

impl Drop for GatePermit<'_> {
    fn drop(&mut self) {
        self.gate.release();
    }
}

/// Base (un-jittered) backoff delay before retry number `retry` (1-based):
/// initial * 2^(retry-1), capped.
pub fn backoff_base_delay(retry: u32, initial_ms: u64, cap_ms: u64) -> Duration {
    let factor = 1u64.checked_shl(retry.saturating_sub(1)).unwrap_or(u64::MAX);
    let ms = initial_ms.saturating_mul(factor).min(cap_ms);
    Duration::from_millis(ms)
}

pub struct HttpBackend {
    config: BackendConfig,
    api_key: String,
    transport: Box<dyn Transport>,
    gate: Gate,
    log: CallLog,
}

impl HttpBackend {
    /// Build a live backend; the bearer token is read from the
    /// environment variable named in the config.
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            BackendError::Config(format!(
                "environment variable {} is not set",
                config.api_key_env
            ))
        })?;
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self::with_transport(config, api_key, Box::new(ReqwestTransport { client })))
    }

    /// Build with an explicit transport (used by tests).
    pub fn with_transport(
        config: BackendConfig,
        api_key: String,
        transport: Box<dyn Transport>,
    ) -> Self {
        let gate = Gate::new(config.max_parallel.max(1));
        HttpBackend { config, api_key, transport, gate, log: CallLog::new() }
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn wire_body(request: &CompletionRequest) -> serde_json::Value {
        json!({
            "model": request.model_id,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }

    fn parse_content(body: &str) -> Result<String, BackendError> {
        let value: serde_json::Value = serde_json::from_str(body)
            .map_err(|_| BackendError::MalformedResponse(snippet(body)))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| BackendError::MalformedResponse(snippet(body)))
    }

    fn run(&self, request: &CompletionRequest) -> (Result<String, BackendError>, u32) {
        let url = self.endpoint();
        let body = Self::wire_body(request);
        let timeout = Duration::from_secs(self.config.timeout_secs);
        let mut attempts: u32 = 0;
        let mut last;
        loop {
            attempts += 1;
            let outcome = {
                let _permit = self.gate.acquire();
                self.transport.post_chat(&url, &self.api_key, &body, timeout)
            };
            match outcome {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    return (Self::parse_content(&reply.body), attempts - 1);
                }
                Ok(reply) if reply.status == 401 || reply.status == 403 => {
                    return (
                        Err(BackendError::AuthFailure(snippet(&reply.body))),
                        attempts - 1,
                    );
                }
                Ok(reply) if reply.status == 429 || reply.status >= 500 => {
                    last = format!("http {}: {}", reply.status, snippet(&reply.body));
                }
                Ok(reply) => {
                    return (
                        Err(BackendError::Http {
                            status: reply.status,
                            body: snippet(&reply.body),
                        }),
                        attempts - 1,
                    );
                }
                Err(failure) => {
                    last = failure.to_string();
                }
            }
            if attempts > self.config.max_retries {
                return (
                    Err(BackendError::ExhaustedRetries { attempts, last }),
                    attempts - 1,
                );
            }
            let base = backoff_base_delay(
                attempts,
                self.config.backoff_initial_ms,
                self.config.backoff_cap_ms,
            );
            let jitter = rand::thread_rng().gen_range(0.5..1.5);
            std::thread::sleep(base.mul_f64(jitter));
        }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        request.validate()?;
        let started = Instant::now();
        let (result, retries) = self.run(request);
        self.log.record(
            request.hash(),
            result.as_deref(),
            started.elapsed().as_millis() as u64,
            retries,
        );
        result
    }

    fn call_log(&self) -> &CallLog {
        &self.log
    }
}

fn snippet(body: &str) -> String {
    let trimmed = body.trim();
    if trimmed.len() <= 200 {
        trimmed.to_owned()
    } else {
        let cut = trimmed
            .char_indices()
            .take_while(|&(i, _)| i < 200)
            .last()
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(0);
        format!("{}...", &trimmed[..cut])
    }
}

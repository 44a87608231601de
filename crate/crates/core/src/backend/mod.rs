//! Chat-completion backends: a live OpenAI-compatible HTTP client and a
//! deterministic scripted backend behind one trait, with shared call
//! logging.

pub mod http;
pub mod scripted;

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use http::{HttpBackend, Transport, TransportFailure, TransportReply};
pub use scripted::{ScriptRule, ScriptedBackend};

/// Message author role in the chat-completions schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// One chat message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, content: content.into() }
    }
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

/// Decoding parameters for one pipeline stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenParams {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl GenParams {
    /// Defaults for generation stages (role cards, topics, dialogue).
    pub fn generation(model_id: impl Into<String>) -> Self {
        GenParams { model_id: model_id.into(), temperature: 0.7, max_tokens: 512 }
    }

    /// Defaults for judging: as deterministic as the endpoint allows.
    pub fn judging(model_id: impl Into<String>) -> Self {
        GenParams { model_id: model_id.into(), temperature: 0.0, max_tokens: 16 }
    }
}

/// A complete chat-completion request.
#[derive(Debug, Clone, Serialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl CompletionRequest {
    pub fn new(params: &GenParams, messages: Vec<ChatMessage>) -> Self {
        CompletionRequest {
            model_id: params.model_id.clone(),
            messages,
            temperature: params.temperature,
            max_tokens: params.max_tokens,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.messages.is_empty() {
            return Err(BackendError::InvalidRequest("no messages".into()));
        }
        if self.messages[0].role == Role::Assistant {
            return Err(BackendError::InvalidRequest(
                "first message must be system or user".into(),
            ));
        }
        if self.temperature < 0.0 {
            return Err(BackendError::InvalidRequest("negative temperature".into()));
        }
        for m in &self.messages {
            if m.role != Role::System && m.content.is_empty() {
                return Err(BackendError::InvalidRequest(
                    "empty user/assistant message".into(),
                ));
            }
        }
        Ok(())
    }

    /// Content-addressed hash used to correlate log records.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("request serializes");
        let digest = Sha256::digest(&bytes);
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    /// Content of the last user message, if any.
    pub fn last_user_content(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }

    /// Text scripted rules match against: the last user message, or the
    /// last message of any role when no user message exists.
    pub fn probe_text(&self) -> &str {
        self.last_user_content()
            .or_else(|| self.messages.last().map(|m| m.content.as_str()))
            .unwrap_or("")
    }
}

/// Configuration for the live HTTP backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub base_url: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub max_retries: u32,
    pub backoff_initial_ms: u64,
    pub backoff_cap_ms: u64,
    pub max_parallel: usize,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            max_retries: 5,
            backoff_initial_ms: 1_000,
            backoff_cap_ms: 30_000,
            max_parallel: 4,
            timeout_secs: 60,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_parallel < 1 {
            return Err(BackendError::Config("max_parallel must be >= 1".into()));
        }
        if self.base_url.is_empty() {
            return Err(BackendError::Config("base_url is empty".into()));
        }
        Ok(())
    }
}

/// One log entry per logical call (covering its whole attempt chain).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CallRecord {
    pub seq: u64,
    pub request_hash: String,
    pub response: Option<String>,
    pub error: Option<String>,
    pub latency_ms: u64,
    pub retries: u32,
    pub timestamp_ms: u64,
}

/// Append-only, internally synchronized record sink.
#[derive(Debug, Default)]
pub struct CallLog {
    records: Mutex<Vec<CallRecord>>,
    next_seq: AtomicU64,
}

impl CallLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(
        &self,
        request_hash: String,
        outcome: Result<&str, &BackendError>,
        latency_ms: u64,
        retries: u32,
    ) {
        let seq = self.next_seq.fetch_add(1, Ordering::Relaxed);
        let timestamp_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        let (response, error) = match outcome {
            Ok(text) => (Some(text.to_owned()), None),
            Err(e) => (None, Some(e.to_string())),
        };
        self.records.lock().unwrap().push(CallRecord {
            seq,
            request_hash,
            response,
            error,
            latency_ms,
            retries,
            timestamp_ms,
        });
    }

    pub fn len(&self) -> usize {
        self.records.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot sorted by admission sequence.
    pub fn snapshot(&self) -> Vec<CallRecord> {
        let mut records = self.records.lock().unwrap().clone();
        records.sort_by_key(|r| r.seq);
        records
    }

    /// Persist the log as JSON-lines.
    pub fn write_jsonl(&self, path: &Path) -> std::io::Result<()> {
        let mut out = String::new();
        for record in self.snapshot() {
            out.push_str(&serde_json::to_string(&record).expect("record serializes"));
            out.push('\n');
        }
        std::fs::write(path, out)
    }
}

/// A chat-completion provider. Implementations are shareable across
/// concurrent workers.
pub trait ChatBackend: Send + Sync {
    /// Run one logical completion and return the assistant text.
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError>;

    /// The backend's call log.
    fn call_log(&self) -> &CallLog;
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("retries exhausted after {attempts} attempts: {last}")]
    ExhaustedRetries { attempts: u32, last: String },
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("response body does not match the chat-completions schema: {0}")]
    MalformedResponse(String),
    #[error("scripted backend has no replies left")]
    ScriptExhausted,
    #[error("no script rule matched the incoming message: {0:?}")]
    NoRuleMatched(String),
    #[error("http {status}: {body}")]
    Http { status: u16, body: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

//! Deterministic scripted backend, enough to drive the whole pipeline
//! offline.

use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{BackendError, CallLog, ChatBackend, CompletionRequest};

/// One script entry.
///
/// Pattern rules persist and fire whenever their `contains` text occurs
/// in the incoming message; literal replies are consumed in FIFO order.
/// On each call the script is scanned in order and the first applicable
/// entry wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptRule {
    Pattern { contains: String, reply: String },
    Literal { reply: String },
}

impl ScriptRule {
    pub fn literal(reply: impl Into<String>) -> Self {
        ScriptRule::Literal { reply: reply.into() }
    }
    pub fn pattern(contains: impl Into<String>, reply: impl Into<String>) -> Self {
        ScriptRule::Pattern { contains: contains.into(), reply: reply.into() }
    }
}

pub struct ScriptedBackend {
    entries: Vec<ScriptRule>,
    consumed: Mutex<Vec<bool>>,
    log: CallLog,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<ScriptRule>) -> Self {
        let consumed = vec![false; entries.len()];
        ScriptedBackend { entries, consumed: Mutex::new(consumed), log: CallLog::new() }
    }

    /// A pure FIFO script of literal replies.
    pub fn from_literals<S: Into<String>>(replies: Vec<S>) -> Self {
        Self::new(replies.into_iter().map(ScriptRule::literal).collect())
    }

    /// A dispatch table of (contains, reply) rules.
    pub fn from_rules<S: Into<String>>(rules: Vec<(S, S)>) -> Self {
        Self::new(
            rules
                .into_iter()
                .map(|(contains, reply)| ScriptRule::pattern(contains, reply))
                .collect(),
        )
    }

    /// Load a script from a JSON-lines file: one rule object per line,
    /// either `{"reply": "..."}` or `{"contains": "...", "reply": "..."}`.
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let content = std::fs::read_to_string(path).map_err(|e| {
            BackendError::Config(format!("cannot read script {}: {e}", path.display()))
        })?;
        let mut entries = Vec::new();
        for (idx, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let rule: ScriptRule = serde_json::from_str(line).map_err(|e| {
                BackendError::Config(format!(
                    "script {} line {}: {e}",
                    path.display(),
                    idx + 1
                ))
            })?;
            entries.push(rule);
        }
        Ok(Self::new(entries))
    }

    fn reply_for(&self, probe: &str) -> Result<String, BackendError> {
        let mut consumed = self.consumed.lock().unwrap();
        let mut any_pattern = false;
        for (idx, entry) in self.entries.iter().enumerate() {
            match entry {
                ScriptRule::Pattern { contains, reply } => {
                    any_pattern = true;
                    if probe.contains(contains.as_str()) {
                        return Ok(reply.clone());
                    }
                }
                ScriptRule::Literal { reply } => {
                    if !consumed[idx] {
                        consumed[idx] = true;
                        return Ok(reply.clone());
                    }
                }
            }
        }
        if any_pattern {
            Err(BackendError::NoRuleMatched(snippet(probe)))
        } else {
            Err(BackendError::ScriptExhausted)
        }
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        request.validate()?;
        let started = Instant::now();
        let result = self.reply_for(request.probe_text());
        self.log.record(
            request.hash(),
            result.as_deref(),
            started.elapsed().as_millis() as u64,
            0,
        );
        result
    }

    fn call_log(&self) -> &CallLog {
        &self.log
    }
}

fn snippet(text: &str) -> String {
    let mut s: String = text.chars().take(80).collect();
    if s.len() < text.len() {
        s.push_str("...");
    }
    s
}

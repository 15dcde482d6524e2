use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatRequest};
use crate::error::GatewayError;

/// One scripted answer. `matcher` is a substring test against the rendered
/// prompt (system text followed by the user parts).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(rename = "match")]
    pub matcher: String,
    /// Answer per attempt; the last one repeats for later attempts.
    #[serde(alias = "response", deserialize_with = "one_or_many")]
    pub responses: Vec<String>,
}

impl MockRule {
    pub fn new(matcher: impl Into<String>, response: impl Into<String>) -> Self {
        Self {
            matcher: matcher.into(),
            responses: vec![response.into()],
        }
    }

    pub fn with_retries(matcher: impl Into<String>, responses: Vec<String>) -> Self {
        Self {
            matcher: matcher.into(),
            responses,
        }
    }
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(String),
        Many(Vec<String>),
    }
    match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => Ok(vec![s]),
        OneOrMany::Many(v) if !v.is_empty() => Ok(v),
        OneOrMany::Many(_) => Err(serde::de::Error::custom("responses must be non-empty")),
    }
}

/// Ordered rules; the first matching rule answers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    pub rules: Vec<MockRule>,
}

impl MockScript {
    pub fn new(rules: Vec<MockRule>) -> Self {
        Self { rules }
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            GatewayError::NotConfigured(format!("mock script {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            GatewayError::NotConfigured(format!("mock script {}: {e}", path.display()))
        })
    }
}

pub struct MockBackend {
    script: MockScript,
    calls: AtomicUsize,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        Self {
            script,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn answer(&self, prompt: &str, attempt: u32) -> Option<&str> {
        let rule = self
            .script
            .rules
            .iter()
            .find(|r| prompt.contains(&r.matcher))?;
        let idx = (attempt as usize).min(rule.responses.len() - 1);
        Some(&rule.responses[idx])
    }
}

#[async_trait]
impl ChatBackend for MockBackend {
    async fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let prompt = request.rendered();
        match self.answer(&prompt, request.attempt) {
            Some(text) => Ok(text.to_string()),
            None => {
                let head: String = prompt.chars().take(160).collect();
                Err(GatewayError::MockUnmatched(head))
            }
        }
    }
}

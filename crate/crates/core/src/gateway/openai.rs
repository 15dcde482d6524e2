//! OpenAI-compatible `/chat/completions` and `/embeddings` clients.

use std::time::Duration;

use async_trait::async_trait;
use base64::Engine as _;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{ChatBackend, ChatRequest, EmbeddingBackend, UserPart};
use crate::error::GatewayError;
use crate::model::ImageRef;

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub multiplier: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            initial_backoff: Duration::from_secs(1),
            multiplier: 4,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based): 1s, 4s, 16s, ...
    pub fn backoff(&self, retry: u32) -> Duration {
        self.initial_backoff * self.multiplier.saturating_pow(retry)
    }
}

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    /// e.g. `https://api.openai.com/v1`
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retry: RetryPolicy,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            timeout: Duration::from_secs(120),
            retry: RetryPolicy::default(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), path)
    }
}

struct HttpClient {
    config: EndpointConfig,
    http: reqwest::Client,
}

enum Attempt {
    Done(Value),
    Retry(String),
    Fatal(GatewayError),
}

impl HttpClient {
    fn new(config: EndpointConfig) -> Result<Self, GatewayError> {
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::NotConfigured(e.to_string()))?;
        Ok(Self { config, http })
    }

    async fn once(&self, url: &str, body: &Value) -> Attempt {
        let mut req = self.http.post(url).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        let text = match resp.text().await {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            return Attempt::Fatal(GatewayError::Auth(format!("HTTP {status}: {text}")));
        }
        if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if !status.is_success() {
            return Attempt::Fatal(GatewayError::Schema(format!(
                "HTTP {status} rejected request: {text}"
            )));
        }
        match serde_json::from_str(&text) {
            Ok(v) => Attempt::Done(v),
            Err(e) => Attempt::Fatal(GatewayError::Schema(format!("body is not JSON: {e}"))),
        }
    }

    async fn post_json(&self, path: &str, body: &Value) -> Result<Value, GatewayError> {
        let url = self.config.url(path);
        let policy = &self.config.retry;
        let mut last = String::new();
        for attempt in 0..=policy.max_retries {
            if attempt > 0 {
                tokio::time::sleep(policy.backoff(attempt - 1)).await;
            }
            match self.once(&url, body).await {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(msg) => {
                    tracing::warn!(%url, attempt, %msg, "transient endpoint failure");
                    last = msg;
                }
            }
        }
        Err(GatewayError::Network(format!(
            "{} attempts to {url} failed; last: {last}",
            policy.max_retries + 1
        )))
    }
}

pub struct OpenAiBackend {
    client: HttpClient,
}

impl OpenAiBackend {
    pub fn new(config: EndpointConfig) -> Result<Self, GatewayError> {
        Ok(Self {
            client: HttpClient::new(config)?,
        })
    }
}

fn mime_for(location: &str) -> &'static str {
    let lower = location.to_ascii_lowercase();
    if lower.ends_with(".png") {
        "image/png"
    } else if lower.ends_with(".gif") {
        "image/gif"
    } else if lower.ends_with(".webp") {
        "image/webp"
    } else {
        "image/jpeg"
    }
}

fn data_url(mime: &str, bytes: &[u8]) -> String {
    format!(
        "data:{mime};base64,{}",
        base64::engine::general_purpose::STANDARD.encode(bytes)
    )
}

fn image_url(img: &ImageRef) -> Result<String, GatewayError> {
    if img.is_remote() {
        return Ok(img.location.clone());
    }
    let bytes = std::fs::read(&img.location).map_err(|e| GatewayError::Image {
        location: img.location.clone(),
        message: e.to_string(),
    })?;
    Ok(data_url(mime_for(&img.location), &bytes))
}

/// Request body in the chat-completions wire shape.
pub(crate) fn chat_body(request: &ChatRequest) -> Result<Value, GatewayError> {
    let mut content = Vec::with_capacity(request.user_parts.len());
    for part in &request.user_parts {
        content.push(match part {
            UserPart::Text(t) => json!({"type": "text", "text": t}),
            UserPart::Image(img) => {
                json!({"type": "image_url", "image_url": {"url": image_url(img)?}})
            }
            UserPart::ImageData { mime, bytes } => {
                json!({"type": "image_url", "image_url": {"url": data_url(mime, bytes)}})
            }
        });
    }
    Ok(json!({
        "model": request.model_id,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
        "messages": [
            {"role": "system", "content": request.system_text},
            {"role": "user", "content": content},
        ],
    }))
}

pub(crate) fn completion_text(body: &Value) -> Result<String, GatewayError> {
    let message = body
        .get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .ok_or_else(|| GatewayError::Schema("missing choices[0].message".into()))?;
    match message.get("content") {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Null) | None => Ok(String::new()),
        Some(Value::Array(parts)) => Ok(parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join("")),
        Some(other) => Err(GatewayError::Schema(format!(
            "unexpected message content {other}"
        ))),
    }
}

#[async_trait]
impl ChatBackend for OpenAiBackend {
    async fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let body = chat_body(request)?;
        let resp = self.client.post_json("chat/completions", &body).await?;
        completion_text(&resp)
    }
}

pub struct OpenAiEmbedder {
    client: HttpClient,
    model: String,
}

impl OpenAiEmbedder {
    pub fn new(config: EndpointConfig, model: impl Into<String>) -> Result<Self, GatewayError> {
        Ok(Self {
            client: HttpClient::new(config)?,
            model: model.into(),
        })
    }
}

#[async_trait]
impl EmbeddingBackend for OpenAiEmbedder {
    async fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        let body = json!({"model": self.model, "input": text});
        let resp = self.client.post_json("embeddings", &body).await?;
        let values = resp
            .get("data")
            .and_then(|d| d.get(0))
            .and_then(|d| d.get("embedding"))
            .and_then(Value::as_array)
            .ok_or_else(|| GatewayError::Schema("missing data[0].embedding".into()))?;
        values
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| GatewayError::Schema("non-numeric embedding value".into()))
            })
            .collect()
    }
}

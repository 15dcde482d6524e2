//! Chat-completion and embedding access.
//!
//! Every agent talks to a [`ChatClient`]. The production implementation is
//! [`Gateway`], which puts a persistent response cache in front of a
//! [`ChatBackend`] (an OpenAI-compatible endpoint or a scripted mock).

mod cache;
mod embed;
mod mock;
mod openai;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use async_trait::async_trait;
use sha2::{Digest, Sha256};

pub use cache::ResponseCache;
pub use embed::{EmbeddingTable, HashingEmbedder, FALLBACK_DIMENSION};
pub use mock::{MockBackend, MockRule, MockScript};
pub use openai::{EndpointConfig, OpenAiBackend, OpenAiEmbedder, RetryPolicy};

use crate::error::GatewayError;
use crate::model::ImageRef;

#[derive(Debug, Clone, PartialEq)]
pub enum UserPart {
    Text(String),
    /// Image by reference; bytes are read when needed.
    Image(ImageRef),
    /// Image already in memory.
    ImageData { mime: String, bytes: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub system_text: String,
    pub user_parts: Vec<UserPart>,
    pub temperature: f32,
    pub max_tokens: u32,
    pub model_id: String,
    /// 0 for the first attempt, incremented on parse-failure retries.
    pub attempt: u32,
}

impl ChatRequest {
    /// Plain-text view of the prompt. Images appear as `<image:location>`.
    pub fn rendered(&self) -> String {
        let mut out = self.system_text.clone();
        out.push('\n');
        for part in &self.user_parts {
            match part {
                UserPart::Text(t) => out.push_str(t),
                UserPart::Image(img) => {
                    out.push_str("<image:");
                    out.push_str(&img.location);
                    out.push('>');
                }
                UserPart::ImageData { mime, .. } => {
                    out.push_str("<image:");
                    out.push_str(mime);
                    out.push('>');
                }
            }
        }
        out
    }

    pub fn retry(&self) -> ChatRequest {
        ChatRequest {
            attempt: self.attempt + 1,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub text: String,
    pub cached: bool,
    pub latency: Duration,
}

/// SHA-256 hex digest of an image: the declared digest if present, else
/// the content of a local file, else the remote location string.
pub fn image_digest(img: &ImageRef) -> String {
    if let Some(d) = &img.digest {
        return d.to_ascii_lowercase();
    }
    if img.is_remote() {
        return hex::encode(Sha256::digest(format!("url:{}", img.location).as_bytes()));
    }
    match std::fs::read(&img.location) {
        Ok(bytes) => hex::encode(Sha256::digest(&bytes)),
        Err(_) => hex::encode(Sha256::digest(format!("unreadable:{}", img.location).as_bytes())),
    }
}

/// Stable digest identifying a request for caching.
///
/// Covers model id, temperature, system text, user text parts and image
/// content digests. Retry attempts (attempt > 0) are keyed separately so a
/// retried call is cached on its own.
pub fn cache_key(request: &ChatRequest) -> String {
    let mut h = Sha256::new();
    let mut field = |tag: &str, value: &[u8]| {
        h.update(tag.as_bytes());
        h.update((value.len() as u64).to_le_bytes());
        h.update(value);
    };
    field("model", request.model_id.as_bytes());
    field("temperature", &request.temperature.to_bits().to_le_bytes());
    field("system", request.system_text.as_bytes());
    for part in &request.user_parts {
        match part {
            UserPart::Text(t) => field("text", t.as_bytes()),
            UserPart::Image(img) => field("image", image_digest(img).as_bytes()),
            UserPart::ImageData { bytes, .. } => {
                field("image", hex::encode(Sha256::digest(bytes)).as_bytes())
            }
        }
    }
    if request.attempt > 0 {
        field("attempt", &request.attempt.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// A model endpoint that turns a request into completion text.
#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError>;
}

/// A text embedding endpoint.
#[async_trait]
pub trait EmbeddingBackend: Send + Sync {
    async fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError>;
}

/// What the agents depend on.
#[async_trait]
pub trait ChatClient: Send + Sync {
    async fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GatewayStats {
    /// Every `chat` invocation.
    pub requests: usize,
    pub cache_hits: usize,
    /// Calls that reached the backend.
    pub backend_calls: usize,
}

pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    embedder: Arc<dyn EmbeddingBackend>,
    cache: Option<ResponseCache>,
    requests: AtomicUsize,
    cache_hits: AtomicUsize,
    backend_calls: AtomicUsize,
    embed_dim: OnceLock<usize>,
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>, embedder: Arc<dyn EmbeddingBackend>) -> Self {
        Self {
            backend,
            embedder,
            cache: None,
            requests: AtomicUsize::new(0),
            cache_hits: AtomicUsize::new(0),
            backend_calls: AtomicUsize::new(0),
            embed_dim: OnceLock::new(),
        }
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            requests: self.requests.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
            backend_calls: self.backend_calls.load(Ordering::SeqCst),
        }
    }

    pub async fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        let v = self.embedder.embed(text).await?;
        let expected = *self.embed_dim.get_or_init(|| v.len());
        if v.len() != expected {
            return Err(GatewayError::Dimension {
                expected,
                actual: v.len(),
            });
        }
        Ok(v)
    }
}

#[async_trait]
impl ChatClient for Gateway {
    async fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let started = Instant::now();
        self.requests.fetch_add(1, Ordering::SeqCst);
        let key = self.cache.as_ref().map(|_| cache_key(request));
        if let (Some(cache), Some(key)) = (&self.cache, &key) {
            if let Some(text) = cache.get(key) {
                self.cache_hits.fetch_add(1, Ordering::SeqCst);
                return Ok(ChatResponse {
                    text,
                    cached: true,
                    latency: started.elapsed(),
                });
            }
        }
        self.backend_calls.fetch_add(1, Ordering::SeqCst);
        let text = self.backend.complete(request).await?;
        if let (Some(cache), Some(key)) = (&self.cache, key) {
            cache.put(&key, &text)?;
        }
        Ok(ChatResponse {
            text,
            cached: false,
            latency: started.elapsed(),
        })
    }
}

/// Counts the requests issued through it; one per pipeline entry.
pub struct MeteredClient<'a, C: ChatClient + ?Sized> {
    inner: &'a C,
    calls: AtomicUsize,
}

impl<'a, C: ChatClient + ?Sized> MeteredClient<'a, C> {
    pub fn new(inner: &'a C) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl<C: ChatClient + ?Sized> ChatClient for MeteredClient<'_, C> {
    async fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.chat(request).await
    }
}

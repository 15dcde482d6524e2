use std::collections::HashMap;

use async_trait::async_trait;

use super::EmbeddingBackend;
use crate::error::{GatewayError, MetricError};
use crate::metrics::{tokenize, TextEmbedder};

pub const FALLBACK_DIMENSION: usize = 256;

/// Feature-hashed bag of words: lowercase word tokens, FNV-1a buckets,
/// L2-normalized. Empty text maps to the zero vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    pub dimension: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self {
            dimension: FALLBACK_DIMENSION,
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl HashingEmbedder {
    pub fn vector(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        for tok in tokenize(text) {
            v[(fnv1a(tok.as_bytes()) % self.dimension as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

#[async_trait]
impl EmbeddingBackend for HashingEmbedder {
    async fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        Ok(self.vector(text))
    }
}

impl TextEmbedder for HashingEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, MetricError> {
        Ok(self.vector(text))
    }
}

/// Precomputed embeddings, for scoring with a remote embedder: fetch every
/// needed text up front, then score synchronously.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn insert(&mut self, text: impl Into<String>, vector: Vec<f64>) {
        self.vectors.insert(text.into(), vector);
    }

    pub fn contains(&self, text: &str) -> bool {
        self.vectors.contains_key(text)
    }
}

impl TextEmbedder for EmbeddingTable {
    fn embed(&self, text: &str) -> Result<Vec<f64>, MetricError> {
        self.vectors
            .get(text)
            .cloned()
            .ok_or_else(|| MetricError::Embedder(format!("no embedding for {text:?}")))
    }
}

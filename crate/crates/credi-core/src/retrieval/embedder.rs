//! Embedder implementations: a deterministic offline fallback and a remote
//! HTTP endpoint client.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{EmbeddingVector, RetrievalError};

/// Turns text into a fixed-dimension vector. Must be deterministic for a
/// fixed input and embedder identity; the identity travels in the index
/// header so mixed-embedder indexes are detectable.
pub trait Embedder {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, RetrievalError>;

    /// Batch embedding; the default just loops. Implementations may send
    /// one request per batch instead.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Feature-hashing embedder over character n-grams (n = 1..=3).
///
/// Each n-gram is FNV-1a hashed; the hash picks a bucket and a sign, the
/// signed counts are L2-normalized. No model weights, fully offline, and
/// stable across runs and platforms.
pub struct HashEmbedder {
    dim: usize,
    name: String,
}

pub const DEFAULT_HASH_DIM: usize = 256;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x100_0000_01b3;

impl HashEmbedder {
    pub fn new(dim: usize) -> HashEmbedder {
        assert!(dim > 0, "embedding dimension must be positive");
        HashEmbedder { dim, name: format!("hash-ngram3-{dim}") }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder::new(DEFAULT_HASH_DIM)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

impl Embedder for HashEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, RetrievalError> {
        let mut values = vec![0.0f32; self.dim];
        let chars: Vec<char> = text.chars().collect();
        let mut buf = String::new();
        for n in 1..=3usize {
            for window in chars.windows(n) {
                buf.clear();
                buf.extend(window.iter());
                let hash = fnv1a(buf.as_bytes());
                let bucket = (hash % self.dim as u64) as usize;
                let sign = if hash & (1 << 63) == 0 { 1.0 } else { -1.0 };
                values[bucket] += sign;
            }
        }
        Ok(EmbeddingVector::new(values).normalized())
    }
}

/// Client for an HTTP embedding endpoint.
///
/// Request: `POST <endpoint>` with `{"input": [texts], "model": name?}`;
/// response: `{"data": [{"embedding": [floats]}, ...]}` in input order.
/// `CREDI_API_KEY`, when set, is sent as a bearer token.
pub struct RemoteEmbedder {
    agent: ureq::Agent,
    endpoint: String,
    model: Option<String>,
    dim: usize,
    name: String,
}

impl RemoteEmbedder {
    pub fn new(
        endpoint: impl Into<String>,
        model: Option<String>,
        dim: usize,
        timeout: Duration,
    ) -> RemoteEmbedder {
        let endpoint = endpoint.into();
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        RemoteEmbedder {
            name: format!("remote:{}", model.as_deref().unwrap_or(&endpoint)),
            agent,
            endpoint,
            model,
            dim,
        }
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        #[derive(Deserialize)]
        struct Item {
            embedding: Vec<f32>,
        }
        #[derive(Deserialize)]
        struct Response {
            data: Vec<Item>,
        }

        let mut body = json!({ "input": texts });
        if let Some(model) = &self.model {
            body["model"] = json!(model);
        }
        let mut request = self.agent.post(&self.endpoint);
        if let Ok(key) = std::env::var("CREDI_API_KEY") {
            request = request.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| RetrievalError::Http(e.to_string()))?;
        let parsed: Response = response
            .body_mut()
            .read_json()
            .map_err(|e| RetrievalError::Http(format!("malformed embedding response: {e}")))?;
        if parsed.data.len() != texts.len() {
            return Err(RetrievalError::Http(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                parsed.data.len()
            )));
        }
        parsed
            .data
            .into_iter()
            .map(|item| {
                if item.embedding.len() != self.dim {
                    return Err(RetrievalError::DimensionMismatch {
                        expected: self.dim,
                        got: item.embedding.len(),
                    });
                }
                Ok(EmbeddingVector::new(item.embedding).normalized())
            })
            .collect()
    }
}

impl Embedder for RemoteEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, RetrievalError> {
        Ok(self.request(&[text])?.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        self.request(texts)
    }
}

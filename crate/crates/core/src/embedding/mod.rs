//! Text embeddings behind a pluggable provider boundary, plus cosine
//! similarity.
//!
//! Two providers ship with the engine: an offline hashed n-gram embedder
//! and an HTTP client for an external transformer service. Either can be
//! wrapped in a persistent cache keyed by provider fingerprint and text.

mod cache;
mod hashed;
mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cached_embed, CachedProvider, EmbeddingCache};
pub use hashed::{hashed_ngram_embed, ngrams, HashedNgramProvider};
pub use remote::{remote_embed_batch, HealthResponse, RemoteProvider, DEFAULT_RETRIES};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("remote embedding service unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("remote embedding service rejected the request ({status}): {message}")]
    RemoteRejected { status: u16, message: String },
    #[error("malformed response from embedding service: {0}")]
    MalformedResponse(String),
    #[error("invalid provider configuration: {0}")]
    InvalidConfig(String),
    #[error("embedding cache {path}: {message}")]
    Cache { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, EmbedError>;

/// A fixed-dimension text representation. Provider output is either the
/// zero vector or unit-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Self {
        Self { values }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { values: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// L2-normalized copy; the zero vector stays zero.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Self {
            values: self.values.iter().map(|&v| (f64::from(v) / n) as f32).collect(),
        }
    }

    pub fn scaled(&self, factor: f32) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

impl From<Vec<f32>> for EmbeddingVector {
    fn from(values: Vec<f32>) -> Self {
        Self::new(values)
    }
}

/// `dot(a, b) / (|a| |b|)`, accumulated in f64. Returns 0.0 when either
/// vector has zero norm.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(cosine_unchecked(a.values(), b.values()))
}

pub(crate) fn cosine_unchecked(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Anything that turns texts into vectors of one fixed dimension.
pub trait EmbeddingProvider: Send + Sync {
    /// Identifies the exact embedding configuration. Models record it so
    /// they are never queried with vectors from a different space.
    fn fingerprint(&self) -> String;

    fn dim(&self) -> usize;

    /// One vector per input, in input order.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let mut out = self.embed_batch(&[text])?;
        out.pop()
            .ok_or_else(|| EmbedError::MalformedResponse("provider returned no vector".into()))
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        (**self).embed_batch(texts)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for std::sync::Arc<P> {
    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        (**self).embed_batch(texts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProviderConfig {
    HashedNgram { dim: usize, seed: u64 },
    RemoteHttp { endpoint: String, dim: usize },
}

impl ProviderConfig {
    pub fn hashed(dim: usize, seed: u64) -> Self {
        Self::HashedNgram { dim, seed }
    }

    pub fn remote(endpoint: impl Into<String>, dim: usize) -> Self {
        Self::RemoteHttp {
            endpoint: endpoint.into(),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::HashedNgram { dim, .. } | Self::RemoteHttp { dim, .. } => *dim,
        }
    }

    pub fn fingerprint(&self) -> String {
        match self {
            Self::HashedNgram { dim, seed } => hashed::fingerprint(*dim, *seed),
            Self::RemoteHttp { endpoint, dim } => remote::fingerprint(endpoint, *dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::HashedNgram { dim, .. } if *dim < 2 => {
                Err(EmbedError::InvalidConfig(format!("hashed dim must be >= 2, got {dim}")))
            }
            Self::RemoteHttp { dim: 0, .. } => Err(EmbedError::InvalidConfig("dim must be > 0".into())),
            Self::RemoteHttp { endpoint, .. } if endpoint.is_empty() => {
                Err(EmbedError::InvalidConfig("remote provider needs an endpoint".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>> {
        self.validate()?;
        Ok(match self {
            Self::HashedNgram { dim, seed } => Box::new(HashedNgramProvider::new(*dim, *seed)),
            Self::RemoteHttp { endpoint, dim } => Box::new(RemoteProvider::new(endpoint.clone(), *dim)),
        })
    }
}

/// Embeds a single text with a freshly built provider.
pub fn embed_text(config: &ProviderConfig, text: &str) -> Result<EmbeddingVector> {
    config.build()?.embed(text)
}

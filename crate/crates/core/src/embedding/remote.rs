//! HTTP client for an external sentence-embedding service.
//!
//! Wire protocol: `POST {endpoint}/embed` with `{"texts": [...]}` answers
//! `{"model", "dim", "vectors"}`; `GET {endpoint}/health` answers
//! `{"status", "model", "dim"}`. Errors come back as `{"error": "..."}`
//! with a 4xx/5xx status.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{EmbedError, EmbeddingProvider, EmbeddingVector, Result};

pub const DEFAULT_RETRIES: u32 = 3;
const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
const DEFAULT_BATCH: usize = 64;

pub(super) fn fingerprint(endpoint: &str, dim: usize) -> String {
    format!("remote-http/v1:dim={dim}:endpoint={}", endpoint.trim_end_matches('/'))
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    #[allow(dead_code)]
    model: String,
    dim: usize,
    vectors: Vec<Vec<f32>>,
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model: String,
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub struct RemoteProvider {
    endpoint: String,
    dim: usize,
    retries: u32,
    backoff: Duration,
    batch_size: usize,
    agent: Agent,
}

impl RemoteProvider {
    pub fn new(endpoint: impl Into<String>, dim: usize) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(DEFAULT_TIMEOUT))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_owned(),
            dim,
            retries: DEFAULT_RETRIES,
            backoff: Duration::from_millis(200),
            batch_size: DEFAULT_BATCH,
            agent,
        }
    }

    /// Number of additional attempts after the first failure.
    pub fn with_retries(mut self, retries: u32, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn health(&self) -> Result<HealthResponse> {
        let url = format!("{}/health", self.endpoint);
        let mut resp = self
            .agent
            .get(&url)
            .call()
            .map_err(|e| EmbedError::RemoteUnavailable(format!("{url}: {e}")))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| EmbedError::MalformedResponse(e.to_string()))?;
        if status != 200 {
            return Err(EmbedError::RemoteUnavailable(format!("{url}: status {status}: {body}")));
        }
        serde_json::from_str(&body).map_err(|e| EmbedError::MalformedResponse(e.to_string()))
    }

    fn post_once(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let url = format!("{}/embed", self.endpoint);
        let mut resp = self
            .agent
            .post(&url)
            .send_json(EmbedRequest { texts })
            .map_err(|e| EmbedError::RemoteUnavailable(format!("{url}: {e}")))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| EmbedError::RemoteUnavailable(format!("{url}: reading body: {e}")))?;
        if status != 200 {
            let message = serde_json::from_str::<ErrorBody>(&body)
                .map(|b| b.error)
                .unwrap_or(body);
            return Err(if status >= 500 {
                EmbedError::RemoteUnavailable(format!("{url}: status {status}: {message}"))
            } else {
                EmbedError::RemoteRejected { status, message }
            });
        }
        let parsed: EmbedResponse =
            serde_json::from_str(&body).map_err(|e| EmbedError::MalformedResponse(e.to_string()))?;
        if parsed.dim != self.dim {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dim,
                actual: parsed.dim,
            });
        }
        if parsed.vectors.len() != texts.len() {
            return Err(EmbedError::MalformedResponse(format!(
                "sent {} texts, received {} vectors",
                texts.len(),
                parsed.vectors.len()
            )));
        }
        parsed
            .vectors
            .into_iter()
            .map(|v| {
                if v.len() != parsed.dim {
                    return Err(EmbedError::DimensionMismatch {
                        expected: parsed.dim,
                        actual: v.len(),
                    });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(EmbedError::MalformedResponse("non-finite vector component".into()));
                }
                Ok(EmbeddingVector::new(v).normalized())
            })
            .collect()
    }

    fn post_with_retries(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let mut attempt = 0;
        loop {
            match self.post_once(texts) {
                Err(EmbedError::RemoteUnavailable(msg)) if attempt < self.retries => {
                    attempt += 1;
                    log::warn!("embedding service unavailable (attempt {attempt}): {msg}");
                    std::thread::sleep(self.backoff * attempt);
                }
                Err(EmbedError::RemoteUnavailable(msg)) => {
                    return Err(EmbedError::RemoteUnavailable(format!(
                        "{msg} (after {} attempts)",
                        attempt + 1
                    )))
                }
                other => return other,
            }
        }
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn fingerprint(&self) -> String {
        fingerprint(&self.endpoint, self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.batch_size) {
            out.extend(self.post_with_retries(chunk)?);
        }
        Ok(out)
    }
}

/// One-shot batch call against `endpoint`, expecting vectors of `dim`.
pub fn remote_embed_batch(endpoint: &str, dim: usize, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
    RemoteProvider::new(endpoint, dim).embed_batch(texts)
}

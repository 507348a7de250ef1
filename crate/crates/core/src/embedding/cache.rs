//! Persistent embedding cache.
//!
//! Keys are `hex(sha256(fingerprint || 0x00 || text))`; values are the raw
//! little-endian f32 bytes, hex-encoded, so reloads are bit-exact. The
//! file is a single JSON object written atomically.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbedError, EmbeddingProvider, EmbeddingVector, Result};

const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    entries: BTreeMap<String, String>,
}

pub fn cache_key(fingerprint: &str, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(fingerprint.as_bytes());
    h.update([0u8]);
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

fn encode_vec(v: &EmbeddingVector) -> String {
    let mut bytes = Vec::with_capacity(v.dim() * 4);
    for x in v.values() {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    hex::encode(bytes)
}

fn decode_vec(s: &str) -> Option<EmbeddingVector> {
    let bytes = hex::decode(s).ok()?;
    if bytes.len() % 4 != 0 {
        return None;
    }
    Some(EmbeddingVector::new(
        bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
    ))
}

#[derive(Debug, Default)]
pub struct EmbeddingCache {
    path: Option<PathBuf>,
    entries: RwLock<BTreeMap<String, EmbeddingVector>>,
}

impl EmbeddingCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens a cache file, starting empty if it does not exist yet.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let cache_err = |message: String| EmbedError::Cache {
            path: path.display().to_string(),
            message,
        };
        let mut entries = BTreeMap::new();
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| cache_err(e.to_string()))?;
            let file: CacheFile = serde_json::from_str(&text).map_err(|e| cache_err(e.to_string()))?;
            if file.version != CACHE_VERSION {
                return Err(cache_err(format!("unsupported cache version {}", file.version)));
            }
            for (k, v) in file.entries {
                let vec = decode_vec(&v).ok_or_else(|| cache_err(format!("corrupt entry {k}")))?;
                entries.insert(k, vec);
            }
        }
        Ok(Self {
            path: Some(path),
            entries: RwLock::new(entries),
        })
    }

    pub fn get(&self, fingerprint: &str, text: &str) -> Option<EmbeddingVector> {
        self.entries
            .read()
            .expect("cache lock poisoned")
            .get(&cache_key(fingerprint, text))
            .cloned()
    }

    pub fn insert(&self, fingerprint: &str, text: &str, vector: EmbeddingVector) {
        self.entries
            .write()
            .expect("cache lock poisoned")
            .insert(cache_key(fingerprint, text), vector);
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes the cache to its file. No-op for in-memory caches.
    pub fn save(&self) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let cache_err = |e: std::io::Error| EmbedError::Cache {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let file = CacheFile {
            version: CACHE_VERSION,
            entries: self
                .entries
                .read()
                .expect("cache lock poisoned")
                .iter()
                .map(|(k, v)| (k.clone(), encode_vec(v)))
                .collect(),
        };
        let json = serde_json::to_string(&file).expect("cache serializes");
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, json).map_err(cache_err)?;
        std::fs::rename(&tmp, path).map_err(cache_err)
    }
}

/// Wraps a provider so repeated texts are computed once.
pub struct CachedProvider<P> {
    inner: P,
    cache: Arc<EmbeddingCache>,
    computed: AtomicUsize,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P, cache: Arc<EmbeddingCache>) -> Self {
        Self {
            inner,
            cache,
            computed: AtomicUsize::new(0),
        }
    }

    /// Number of texts sent to the wrapped provider so far.
    pub fn computed(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }

    pub fn cache(&self) -> &Arc<EmbeddingCache> {
        &self.cache
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let (out, computed) = embed_through(&self.inner, &self.cache, texts)?;
        self.computed.fetch_add(computed, Ordering::Relaxed);
        Ok(out)
    }
}

/// Looks every text up once, sends the distinct misses to `provider` in a
/// single batch and returns the outputs plus the number computed.
fn embed_through<P: EmbeddingProvider + ?Sized>(
    provider: &P,
    cache: &EmbeddingCache,
    texts: &[&str],
) -> Result<(Vec<EmbeddingVector>, usize)> {
    let fp = provider.fingerprint();
    let mut found: HashMap<&str, EmbeddingVector> = HashMap::with_capacity(texts.len());
    let mut missing: Vec<&str> = Vec::new();
    let mut queued: HashSet<&str> = HashSet::new();
    for &t in texts {
        if found.contains_key(t) || queued.contains(t) {
            continue;
        }
        match cache.get(&fp, t) {
            Some(v) => {
                found.insert(t, v);
            }
            None => {
                queued.insert(t);
                missing.push(t);
            }
        }
    }
    if !missing.is_empty() {
        for (t, v) in missing.iter().zip(provider.embed_batch(&missing)?) {
            cache.insert(&fp, t, v.clone());
            found.insert(t, v);
        }
    }
    Ok((texts.iter().map(|t| found[t].clone()).collect(), missing.len()))
}

/// Embeds `texts` through `cache`, computing only unseen texts.
pub fn cached_embed<P: EmbeddingProvider + ?Sized>(
    provider: &P,
    cache: &EmbeddingCache,
    texts: &[&str],
) -> Result<Vec<EmbeddingVector>> {
    embed_through(provider, cache, texts).map(|(out, _)| out)
}

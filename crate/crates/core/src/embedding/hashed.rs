//! Offline embedder: signed feature hashing of word unigrams and bigrams.
//!
//! Pipeline: lowercase, split on non-alphanumeric characters, emit each
//! word and each adjacent word pair (joined by one space), hash every
//! n-gram with seeded XXH64, add ±1 at `h mod dim`, then L2-normalize.
//! The sign comes from the top bit of the hash so it stays independent of
//! the bucket index for power-of-two dimensions.

use rayon::prelude::*;
use xxhash_rust::xxh64::xxh64;

use super::{EmbeddingProvider, EmbeddingVector, Result};

pub(super) fn fingerprint(dim: usize, seed: u64) -> String {
    format!("hashed-ngram/xxh64/v1:dim={dim}:seed={seed}")
}

/// Word unigrams followed by adjacent bigrams, in text order.
pub fn ngrams(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    let mut out: Vec<String> = words.iter().map(|w| (*w).to_owned()).collect();
    out.extend(words.windows(2).map(|p| format!("{} {}", p[0], p[1])));
    out
}

pub fn hashed_ngram_embed(text: &str, dim: usize, seed: u64) -> EmbeddingVector {
    assert!(dim >= 2, "hashed embedding needs dim >= 2");
    let mut acc = vec![0.0f64; dim];
    for gram in ngrams(text) {
        let h = xxh64(gram.as_bytes(), seed);
        let idx = (h % dim as u64) as usize;
        acc[idx] += if h >> 63 == 1 { 1.0 } else { -1.0 };
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return EmbeddingVector::zeros(dim);
    }
    EmbeddingVector::new(acc.iter().map(|v| (v / norm) as f32).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedNgramProvider {
    dim: usize,
    seed: u64,
}

impl HashedNgramProvider {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 2, "hashed embedding needs dim >= 2");
        Self { dim, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl EmbeddingProvider for HashedNgramProvider {
    fn fingerprint(&self) -> String {
        fingerprint(self.dim, self.seed)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        Ok(texts
            .par_iter()
            .map(|t| hashed_ngram_embed(t, self.dim, self.seed))
            .collect())
    }
}

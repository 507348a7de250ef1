//! Weak labeling of companies with custom industry codes.
//!
//! A company whose source triple is in the mapping takes the mapped label.
//! Otherwise its description embedding is compared against the industry
//! description embeddings (by default only industries the mapping does not
//! reach) and the best match is taken if it clears the threshold. Companies
//! matching neither rule are dropped and counted.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine_similarity, EmbedError, EmbeddingProvider, EmbeddingVector};
use crate::taxonomy::{CompanyRecord, IndustryTaxonomy, SourceMapping};

#[derive(Debug, Error)]
pub enum WeakLabelError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("no examples in dataset")]
    EmptyDataset,
    #[error("invalid weak-label configuration: {0}")]
    InvalidConfig(String),
    #[error("line {line}: malformed dataset record: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, WeakLabelError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakLabelConfig {
    pub thresh: f64,
    /// Compare only against industries outside mapping coverage.
    pub uncovered_only: bool,
    pub split_ratio: f64,
    pub seed: u64,
}

impl Default for WeakLabelConfig {
    fn default() -> Self {
        Self {
            thresh: 0.5,
            uncovered_only: true,
            split_ratio: 0.8,
            seed: 0,
        }
    }
}

impl WeakLabelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.thresh) {
            return Err(WeakLabelError::InvalidConfig(format!(
                "thresh must be in [0, 1], got {}",
                self.thresh
            )));
        }
        check_ratio(self.split_ratio)
    }
}

fn check_ratio(ratio: f64) -> Result<()> {
    if ratio > 0.0 && ratio < 1.0 {
        Ok(())
    } else {
        Err(WeakLabelError::InvalidConfig(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Mapping,
    Similarity { score: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub company_id: String,
    pub label: String,
    pub provenance: Provenance,
    pub embedding: EmbeddingVector,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelReport {
    pub mapped: usize,
    pub similarity: usize,
    pub dropped: usize,
    pub per_class: BTreeMap<String, usize>,
}

impl LabelReport {
    fn tally(examples: &[LabeledExample], dropped: usize) -> Self {
        let mut r = LabelReport {
            dropped,
            ..Default::default()
        };
        for ex in examples {
            match ex.provenance {
                Provenance::Mapping => r.mapped += 1,
                Provenance::Similarity { .. } => r.similarity += 1,
            }
            *r.per_class.entry(ex.label.clone()).or_default() += 1;
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub examples: Vec<LabeledExample>,
    /// Sorted distinct labels present in `examples`.
    pub class_labels: Vec<String>,
    pub report: LabelReport,
}

impl LabeledDataset {
    pub fn from_examples(examples: Vec<LabeledExample>, dropped: usize) -> Self {
        let class_labels = examples
            .iter()
            .map(|e| e.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let report = LabelReport::tally(&examples, dropped);
        Self {
            examples,
            class_labels,
            report,
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.examples.first().map(|e| e.embedding.dim())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for ex in &self.examples {
            serde_json::to_writer(&mut w, ex)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn read_jsonl<R: Read>(r: R) -> Result<Self> {
        let mut examples = Vec::new();
        for (i, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let ex: LabeledExample = serde_json::from_str(&line).map_err(|e| WeakLabelError::Parse {
                line: i as u64 + 1,
                message: e.to_string(),
            })?;
            examples.push(ex);
        }
        Ok(Self::from_examples(examples, 0))
    }
}

pub fn label_by_mapping(company: &CompanyRecord, mapping: &SourceMapping) -> Option<(String, Provenance)> {
    let triple = company.source_codes.as_ref()?;
    mapping.map(triple).map(|id| (id.to_owned(), Provenance::Mapping))
}

/// Best-scoring candidate if its cosine similarity is at least `thresh`.
/// Equal scores resolve to the smaller id.
pub fn label_by_similarity(
    company_vec: &EmbeddingVector,
    candidates: &[(String, EmbeddingVector)],
    thresh: f64,
) -> Result<Option<(String, Provenance)>> {
    let mut best: Option<(&str, f64)> = None;
    for (id, vec) in candidates {
        let score = cosine_similarity(company_vec, vec)?;
        best = match best {
            Some((bid, bscore)) if bscore > score || (bscore == score && bid <= id.as_str()) => Some((bid, bscore)),
            _ => Some((id.as_str(), score)),
        };
    }
    Ok(best
        .filter(|&(_, score)| score >= thresh)
        .map(|(id, score)| (id.to_owned(), Provenance::Similarity { score })))
}

pub fn build_labeled_dataset<P: EmbeddingProvider + ?Sized>(
    companies: &[CompanyRecord],
    mapping: &SourceMapping,
    taxonomy: &IndustryTaxonomy,
    provider: &P,
    config: &WeakLabelConfig,
) -> Result<LabeledDataset> {
    config.validate()?;
    let candidate_codes: Vec<_> = if config.uncovered_only {
        let uncovered = mapping.uncovered(taxonomy);
        taxonomy.codes().iter().filter(|c| uncovered.contains(&c.id)).collect()
    } else {
        taxonomy.codes().iter().collect()
    };
    let candidate_texts: Vec<&str> = candidate_codes.iter().map(|c| c.description.as_str()).collect();
    let candidates: Vec<(String, EmbeddingVector)> = if candidate_texts.is_empty() {
        Vec::new()
    } else {
        candidate_codes
            .iter()
            .map(|c| c.id.clone())
            .zip(provider.embed_batch(&candidate_texts)?)
            .collect()
    };
    log::info!(
        "weak labeling {} companies; {} similarity candidates (uncovered_only={})",
        companies.len(),
        candidates.len(),
        config.uncovered_only
    );

    let texts: Vec<&str> = companies.iter().map(|c| c.description.as_str()).collect();
    let vectors = if texts.is_empty() {
        Vec::new()
    } else {
        provider.embed_batch(&texts)?
    };

    let mut examples = Vec::with_capacity(companies.len());
    let mut dropped = 0;
    for (company, vec) in companies.iter().zip(vectors) {
        let label = match label_by_mapping(company, mapping) {
            Some(l) => Some(l),
            None => label_by_similarity(&vec, &candidates, config.thresh)?,
        };
        match label {
            Some((label, provenance)) => examples.push(LabeledExample {
                company_id: company.id.clone(),
                label,
                provenance,
                embedding: vec,
            }),
            None => {
                log::debug!("dropping {}: no mapping and no candidate above threshold", company.id);
                dropped += 1;
            }
        }
    }
    if examples.is_empty() {
        return Err(WeakLabelError::EmptyDataset);
    }
    Ok(LabeledDataset::from_examples(examples, dropped))
}

/// Stratified, seeded split. Classes with a single example go to train.
/// Per-class train counts are floor/ceil of `ratio * class_size`, chosen by
/// largest remainder so the stratified total is `round(ratio * n)`.
/// Both halves keep the original example order.
pub fn split_dataset(dataset: &LabeledDataset, ratio: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if dataset.is_empty() {
        return Err(WeakLabelError::EmptyDataset);
    }
    check_ratio(ratio)?;

    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, ex) in dataset.examples.iter().enumerate() {
        by_class.entry(ex.label.as_str()).or_default().push(i);
    }

    let mut in_train = vec![false; dataset.len()];
    let strat: Vec<(&str, &Vec<usize>)> = by_class
        .iter()
        .filter(|(_, ix)| {
            if ix.len() == 1 {
                in_train[ix[0]] = true;
                false
            } else {
                true
            }
        })
        .map(|(k, v)| (*k, v))
        .collect();

    let n_strat: usize = strat.iter().map(|(_, ix)| ix.len()).sum();
    let target = (ratio * n_strat as f64).round() as usize;
    let mut counts: Vec<usize> = strat
        .iter()
        .map(|(_, ix)| (ratio * ix.len() as f64).floor() as usize)
        .collect();
    let mut order: Vec<usize> = (0..strat.len()).collect();
    // largest fractional remainder first, then class order
    order.sort_by(|&a, &b| {
        let ra = ratio * strat[a].1.len() as f64 - counts[a] as f64;
        let rb = ratio * strat[b].1.len() as f64 - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(counts.iter().sum());
    for &c in order.iter().cycle().take(order.len() * 2) {
        if missing == 0 {
            break;
        }
        if counts[c] < strat[c].1.len() {
            counts[c] += 1;
            missing -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for ((_, ix), &n_train) in strat.iter().zip(&counts) {
        let mut shuffled = (*ix).clone();
        shuffled.shuffle(&mut rng);
        for &i in &shuffled[..n_train] {
            in_train[i] = true;
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (ex, t) in dataset.examples.iter().zip(in_train) {
        if t {
            train.push(ex.clone());
        } else {
            test.push(ex.clone());
        }
    }
    Ok((
        LabeledDataset::from_examples(train, 0),
        LabeledDataset::from_examples(test, 0),
    ))
}

//! Two-stage inference: top-k industries from the classifier, then, inside
//! each predicted industry, the product/service codes whose descriptions
//! are most cosine-similar to the company.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{predict_topk, ClassifierError, MlpModel, TopKPrediction};
use crate::embedding::{cosine_similarity, EmbedError, EmbeddingProvider, EmbeddingVector};
use crate::taxonomy::{CompanyRecord, ProductServiceTaxonomy};

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_TOP_N: usize = 2;

#[derive(Debug, Error)]
pub enum PsError {
    #[error("industry {0:?} has no product/service codes in the index")]
    UnknownIndustry(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

pub type Result<T> = std::result::Result<T, PsError>;

/// Product/service description embeddings grouped by parent industry, in
/// taxonomy file order.
#[derive(Debug, Clone, PartialEq)]
pub struct PsIndex {
    by_industry: BTreeMap<String, Vec<(String, EmbeddingVector)>>,
    fingerprint: String,
}

impl PsIndex {
    pub fn new(by_industry: BTreeMap<String, Vec<(String, EmbeddingVector)>>, fingerprint: impl Into<String>) -> Self {
        Self {
            by_industry,
            fingerprint: fingerprint.into(),
        }
    }

    pub fn codes(&self, industry_id: &str) -> Option<&[(String, EmbeddingVector)]> {
        self.by_industry.get(industry_id).map(Vec::as_slice)
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn industries(&self) -> impl Iterator<Item = &str> {
        self.by_industry.keys().map(String::as_str)
    }
}

pub fn embed_ps_taxonomy<P: EmbeddingProvider + ?Sized>(
    taxonomy: &ProductServiceTaxonomy,
    provider: &P,
) -> Result<PsIndex> {
    let texts: Vec<&str> = taxonomy.codes().iter().map(|c| c.description.as_str()).collect();
    let vectors = provider.embed_batch(&texts)?;
    let mut by_industry: BTreeMap<String, Vec<(String, EmbeddingVector)>> = BTreeMap::new();
    for (code, vec) in taxonomy.codes().iter().zip(vectors) {
        by_industry
            .entry(code.industry_id.clone())
            .or_default()
            .push((code.id.clone(), vec));
    }
    Ok(PsIndex::new(by_industry, provider.fingerprint()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCode {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsPrediction {
    pub industry_id: String,
    #[serde(rename = "codes")]
    pub ranked: Vec<ScoredCode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub company_id: String,
    pub industries: TopKPrediction,
    pub products: Vec<PsPrediction>,
}

/// Sorts by descending score, ties by ascending id, and keeps `top_n`.
pub fn rank_scores(mut scored: Vec<ScoredCode>, top_n: usize) -> Vec<ScoredCode> {
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    scored.truncate(top_n);
    scored
}

/// Exhaustive cosine ranking of one industry's codes.
pub fn predict_ps_codes(
    company_vec: &EmbeddingVector,
    industry_id: &str,
    index: &PsIndex,
    top_n: usize,
) -> Result<PsPrediction> {
    let codes = index
        .codes(industry_id)
        .ok_or_else(|| PsError::UnknownIndustry(industry_id.to_owned()))?;
    let scored = codes
        .iter()
        .map(|(id, v)| {
            Ok(ScoredCode {
                id: id.clone(),
                score: cosine_similarity(company_vec, v)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PsPrediction {
        industry_id: industry_id.to_owned(),
        ranked: rank_scores(scored, top_n),
    })
}

/// Runs both stages on an already embedded company.
pub fn classify_embedded(
    company_id: &str,
    company_vec: &EmbeddingVector,
    model: &MlpModel,
    index: &PsIndex,
    k: usize,
    top_n: usize,
) -> Result<Prediction> {
    let industries = predict_topk(model, company_vec, k)?;
    let products = industries
        .ids()
        .map(|id| predict_ps_codes(company_vec, id, index, top_n))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prediction {
        company_id: company_id.to_owned(),
        industries,
        products,
    })
}

/// Bundles a trained model, the product/service index and the provider
/// both were built with.
pub struct HierarchicalClassifier<'a, P: EmbeddingProvider + ?Sized> {
    model: &'a MlpModel,
    index: &'a PsIndex,
    provider: &'a P,
    pub k: usize,
    pub top_n: usize,
}

impl<'a, P: EmbeddingProvider + ?Sized> HierarchicalClassifier<'a, P> {
    /// Fails with `FingerprintMismatch` unless model, index and provider
    /// share one embedding configuration.
    pub fn new(model: &'a MlpModel, index: &'a PsIndex, provider: &'a P) -> Result<Self> {
        let fp = provider.fingerprint();
        model.check_fingerprint(&fp, true)?;
        if index.fingerprint() != fp {
            return Err(ClassifierError::FingerprintMismatch {
                model: index.fingerprint().to_owned(),
                provider: fp,
            }
            .into());
        }
        Ok(Self {
            model,
            index,
            provider,
            k: DEFAULT_K,
            top_n: DEFAULT_TOP_N,
        })
    }

    pub fn with_k(mut self, k: usize, top_n: usize) -> Self {
        self.k = k;
        self.top_n = top_n;
        self
    }

    pub fn classify(&self, company_id: &str, description: &str) -> Result<Prediction> {
        let vec = self.provider.embed(description)?;
        classify_embedded(company_id, &vec, self.model, self.index, self.k, self.top_n)
    }

    /// Embeds all descriptions in one provider batch, then classifies in
    /// parallel. Output order follows input order.
    pub fn classify_all(&self, companies: &[CompanyRecord]) -> Result<Vec<Prediction>> {
        if companies.is_empty() {
            return Ok(Vec::new());
        }
        let texts: Vec<&str> = companies.iter().map(|c| c.description.as_str()).collect();
        let vectors = self.provider.embed_batch(&texts)?;
        companies
            .par_iter()
            .zip(vectors.par_iter())
            .map(|(c, v)| classify_embedded(&c.id, v, self.model, self.index, self.k, self.top_n))
            .collect()
    }
}

/// Full pipeline for one description with the default k = 3, top-n = 2.
pub fn classify_company<P: EmbeddingProvider + ?Sized>(
    company_id: &str,
    description: &str,
    model: &MlpModel,
    index: &PsIndex,
    provider: &P,
) -> Result<Prediction> {
    HierarchicalClassifier::new(model, index, provider)?.classify(company_id, description)
}

pub fn write_predictions<W: std::io::Write>(mut w: W, predictions: &[Prediction]) -> std::io::Result<()> {
    for p in predictions {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_predictions<R: std::io::Read>(r: R) -> std::result::Result<Vec<Prediction>, String> {
    use std::io::BufRead;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(r).lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(x.to_vec())
    }

    fn index() -> PsIndex {
        let mut m = BTreeMap::new();
        m.insert(
            "IND_A".to_string(),
            vec![
                ("PS_1".to_string(), v(&[1.0, 0.0])),
                ("PS_2".to_string(), v(&[0.0, 1.0])),
                ("PS_3".to_string(), v(&[1.0, 1.0])),
            ],
        );
        m.insert("IND_B".to_string(), vec![("PS_9".to_string(), v(&[-1.0, 0.0]))]);
        PsIndex::new(m, "fp")
    }

    #[test]
    fn single_code_industry() {
        let p = predict_ps_codes(&v(&[1.0, 0.0]), "IND_B", &index(), 2).unwrap();
        assert_eq!(p.ranked.len(), 1);
        assert_eq!(p.ranked[0].score, -1.0);
    }

    #[test]
    fn self_similarity_ranks_first() {
        let p = predict_ps_codes(&v(&[0.0, 1.0]), "IND_A", &index(), 2).unwrap();
        assert_eq!(p.ranked[0].id, "PS_2");
        assert!((p.ranked[0].score - 1.0).abs() < 1e-6);
        assert_eq!(p.ranked[1].id, "PS_3");
    }

    #[test]
    fn ties_by_ascending_id_and_zero_vector() {
        let p = predict_ps_codes(&v(&[0.0, 0.0]), "IND_A", &index(), 2).unwrap();
        assert_eq!(
            p.ranked,
            vec![
                ScoredCode {
                    id: "PS_1".into(),
                    score: 0.0
                },
                ScoredCode {
                    id: "PS_2".into(),
                    score: 0.0
                }
            ]
        );
    }

    #[test]
    fn unknown_industry() {
        assert!(matches!(
            predict_ps_codes(&v(&[1.0, 0.0]), "IND_Q", &index(), 2),
            Err(PsError::UnknownIndustry(_))
        ));
    }

    #[test]
    fn prediction_wire_format() {
        let p = Prediction {
            company_id: "c1".into(),
            industries: TopKPrediction {
                ranked: vec![crate::classifier::RankedClass {
                    id: "IND_A".into(),
                    prob: 0.5,
                }],
            },
            products: vec![PsPrediction {
                industry_id: "IND_A".into(),
                ranked: vec![ScoredCode {
                    id: "PS_1".into(),
                    score: 0.25,
                }],
            }],
        };
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(
            json,
            r#"{"company_id":"c1","industries":[{"id":"IND_A","prob":0.5}],"products":[{"industry_id":"IND_A","codes":[{"id":"PS_1","score":0.25}]}]}"#
        );
        let mut buf = Vec::new();
        write_predictions(&mut buf, std::slice::from_ref(&p)).unwrap();
        assert_eq!(read_predictions(&buf[..]).unwrap(), vec![p]);
    }
}

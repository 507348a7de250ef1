//! Evaluation: any-hit top-k accuracy, top-1 confusion matrix, per-class
//! precision/recall and the span statistic (how many predicted classes it
//! takes to cover most of a gold class's row).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pscode::Prediction;
use crate::taxonomy::CompanyRecord;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no gold labels for company {0:?}")]
    MissingGold(String),
    #[error("no predictions to evaluate")]
    Empty,
}

pub type Result<T> = std::result::Result<T, EvalError>;

pub const DEFAULT_SPAN_MASS: f64 = 0.9;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GoldLabels {
    pub industries: Vec<String>,
    pub ps_codes: Vec<String>,
}

/// Gold labels keyed by company id.
pub type Gold = BTreeMap<String, GoldLabels>;

/// Collects gold labels from company records. `fallback` supplies an
/// industry for records without `gold_industries` (e.g. weak labels of a
/// held-out split).
pub fn gold_from_companies(companies: &[CompanyRecord], fallback: Option<&BTreeMap<String, String>>) -> Gold {
    companies
        .iter()
        .map(|c| {
            let industries = match &c.gold_industries {
                Some(g) if !g.is_empty() => g.clone(),
                _ => fallback
                    .and_then(|f| f.get(&c.id))
                    .map(|l| vec![l.clone()])
                    .unwrap_or_default(),
            };
            (
                c.id.clone(),
                GoldLabels {
                    industries,
                    ps_codes: c.gold_ps_codes.clone().unwrap_or_default(),
                },
            )
        })
        .collect()
}

fn gold_industries<'a>(gold: &'a Gold, id: &str) -> Result<&'a [String]> {
    gold.get(id)
        .map(|g| g.industries.as_slice())
        .filter(|g| !g.is_empty())
        .ok_or_else(|| EvalError::MissingGold(id.to_owned()))
}

/// Fraction of predictions with any gold industry among the first `k`.
pub fn topk_accuracy(predictions: &[Prediction], gold: &Gold, k: usize) -> Result<f64> {
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut hits = 0;
    for p in predictions {
        let g = gold_industries(gold, &p.company_id)?;
        if p.industries.ids().take(k).any(|id| g.iter().any(|x| x == id)) {
            hits += 1;
        }
    }
    Ok(hits as f64 / predictions.len() as f64)
}

/// Fraction of predictions with any gold product/service code among all
/// predicted (industry, code) pairs.
pub fn top2_ps_accuracy(predictions: &[Prediction], gold: &Gold) -> Result<f64> {
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut hits = 0;
    for p in predictions {
        let g = gold
            .get(&p.company_id)
            .map(|g| g.ps_codes.as_slice())
            .filter(|g| !g.is_empty())
            .ok_or_else(|| EvalError::MissingGold(p.company_id.clone()))?;
        let hit = p.products.iter().flat_map(|ps| &ps.ranked).any(|c| g.contains(&c.id));
        if hit {
            hits += 1;
        }
    }
    Ok(hits as f64 / predictions.len() as f64)
}

/// Square matrix over the sorted union of gold and predicted labels.
/// Rows are gold (first gold entry), columns the top-1 prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn get(&self, gold: &str, predicted: &str) -> usize {
        match (self.index(gold), self.index(predicted)) {
            (Some(g), Some(p)) => self.counts[g][p],
            _ => 0,
        }
    }

    pub fn row_total(&self, i: usize) -> usize {
        self.counts[i].iter().sum()
    }

    pub fn col_total(&self, j: usize) -> usize {
        self.counts.iter().map(|r| r[j]).sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold\\predicted");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.counts) {
            out.push_str(l);
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion_matrix(predictions: &[Prediction], gold: &Gold) -> Result<ConfusionMatrix> {
    let mut pairs = Vec::with_capacity(predictions.len());
    for p in predictions {
        let g = gold_industries(gold, &p.company_id)?[0].clone();
        let top1 = p
            .industries
            .ids()
            .next()
            .ok_or_else(|| EvalError::MissingGold(p.company_id.clone()))?
            .to_owned();
        pairs.push((g, top1));
    }
    let labels: Vec<String> = pairs
        .iter()
        .flat_map(|(g, p)| [g.clone(), p.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut m = ConfusionMatrix {
        counts: vec![vec![0; labels.len()]; labels.len()],
        labels,
    };
    for (g, p) in pairs {
        let (gi, pi) = (m.index(&g).unwrap(), m.index(&p).unwrap());
        m.counts[gi][pi] += 1;
    }
    Ok(m)
}

/// For each non-empty row, the smallest number of cells (taken
/// largest-first) whose counts reach `mass` of the row total. Empty rows
/// are skipped.
pub fn span_statistic(confusion: &ConfusionMatrix, mass: f64) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for (label, row) in confusion.labels.iter().zip(&confusion.counts) {
        let total: usize = row.iter().sum();
        if total == 0 {
            log::debug!("span: skipping empty row {label}");
            continue;
        }
        let mut cells: Vec<usize> = row.iter().copied().filter(|&c| c > 0).collect();
        cells.sort_unstable_by(|a, b| b.cmp(a));
        let need = mass * total as f64;
        let mut acc = 0usize;
        let mut span = 0;
        for c in cells {
            acc += c;
            span += 1;
            if acc as f64 >= need - 1e-9 {
                break;
            }
        }
        out.insert(label.clone(), span);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub support: usize,
    pub predicted: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

pub fn per_class_stats(confusion: &ConfusionMatrix) -> BTreeMap<String, ClassStats> {
    confusion
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let tp = confusion.counts[i][i];
            let support = confusion.row_total(i);
            let predicted = confusion.col_total(i);
            let ratio = |d: usize| (d > 0).then(|| tp as f64 / d as f64);
            (
                l.clone(),
                ClassStats {
                    support,
                    predicted,
                    precision: ratio(predicted),
                    recall: ratio(support),
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub top3_industry_accuracy: f64,
    /// Absent when no evaluated company carries gold product/service codes.
    pub top2_ps_accuracy: Option<f64>,
    pub n_samples: usize,
    pub n_ps_samples: usize,
    pub confusion: ConfusionMatrix,
    pub per_class: BTreeMap<String, ClassStats>,
    pub span_mass: f64,
    pub span: BTreeMap<String, usize>,
}

impl EvalReport {
    /// Fraction of gold classes whose span is at least `n`.
    pub fn span_at_least(&self, n: usize) -> f64 {
        if self.span.is_empty() {
            return 0.0;
        }
        self.span.values().filter(|&&s| s >= n).count() as f64 / self.span.len() as f64
    }

    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples                      {}", self.n_samples);
        let _ = writeln!(
            s,
            "top-{} industry accuracy      {:.4}",
            self.k, self.top3_industry_accuracy
        );
        match self.top2_ps_accuracy {
            Some(a) => {
                let _ = writeln!(s, "top-2 product/service acc.   {a:.4} (n={})", self.n_ps_samples);
            }
            None => {
                let _ = writeln!(s, "top-2 product/service acc.   n/a");
            }
        }
        let _ = writeln!(
            s,
            "classes with span >= 3       {:.4} (mass {:.2})",
            self.span_at_least(3),
            self.span_mass
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<16} {:>8} {:>10} {:>10} {:>6}",
            "class", "support", "precision", "recall", "span"
        );
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        for (label, st) in &self.per_class {
            let span = self.span.get(label).map_or_else(|| "-".to_string(), |s| s.to_string());
            let _ = writeln!(
                s,
                "{:<16} {:>8} {:>10} {:>10} {:>6}",
                label,
                st.support,
                fmt(st.precision),
                fmt(st.recall),
                span
            );
        }
        s
    }
}

/// Builds the full report. Product/service accuracy is computed over the
/// subset of predictions whose company has gold product/service codes.
pub fn evaluate(predictions: &[Prediction], gold: &Gold, k: usize, span_mass: f64) -> Result<EvalReport> {
    let top3_industry_accuracy = topk_accuracy(predictions, gold, k)?;
    let with_ps: Vec<Prediction> = predictions
        .iter()
        .filter(|p| gold.get(&p.company_id).is_some_and(|g| !g.ps_codes.is_empty()))
        .cloned()
        .collect();
    let top2_ps_accuracy = if with_ps.is_empty() {
        None
    } else {
        Some(top2_ps_accuracy(&with_ps, gold)?)
    };
    let confusion = confusion_matrix(predictions, gold)?;
    Ok(EvalReport {
        k,
        top3_industry_accuracy,
        top2_ps_accuracy,
        n_samples: predictions.len(),
        n_ps_samples: with_ps.len(),
        per_class: per_class_stats(&confusion),
        span: span_statistic(&confusion, span_mass),
        span_mass,
        confusion,
    })
}

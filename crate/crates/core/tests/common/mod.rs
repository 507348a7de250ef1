//! Oracles and fixtures shared by the integration tests and the acceptance
//! runner. Nothing here calls into the code under test for the quantity it
//! is meant to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use codeclass::classifier::{glorot_init, MlpModel};
use codeclass::embedding::{EmbedError, EmbeddingProvider, EmbeddingVector};
use codeclass::taxonomy::{CompanyRecord, IndustryCode, IndustryTaxonomy, SourceCodeTriple, SourceMapping};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Dense reference network.

/// Mean cross-entropy plus `l2/2 * sum(W^2)`, computed densely and naively
/// from the public layer parameters.
#[allow(clippy::needless_range_loop)]
pub fn reference_loss(model: &MlpModel, batch: &[(Vec<f64>, usize)], l2: f64) -> f64 {
    let mut total = 0.0;
    for (x, y) in batch {
        let mut a = x.clone();
        for (li, layer) in model.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.rows];
            for r in 0..layer.rows {
                let mut s = layer.bias[r];
                for c in 0..layer.cols {
                    s += layer.weights[r * layer.cols + c] * a[c];
                }
                z[r] = s;
            }
            a = if li + 1 < model.layers.len() {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                z
            };
        }
        let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + a.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - a[*y];
    }
    let sq: f64 = model.layers.iter().flat_map(|l| &l.weights).map(|w| w * w).sum();
    total / batch.len() as f64 + 0.5 * l2 * sq
}

/// Hidden pre-activations for every example, used to spot ReLU kinks.
fn hidden_preacts(model: &MlpModel, batch: &[(Vec<f64>, usize)]) -> Vec<f64> {
    let mut out = Vec::new();
    for (x, _) in batch {
        let mut a = x.clone();
        for layer in &model.layers[..model.layers.len() - 1] {
            let z: Vec<f64> = (0..layer.rows)
                .map(|r| {
                    layer.bias[r]
                        + (0..layer.cols)
                            .map(|c| layer.weights[r * layer.cols + c] * a[c])
                            .sum::<f64>()
                })
                .collect();
            out.extend_from_slice(&z);
            a = z.iter().map(|v| v.max(0.0)).collect();
        }
    }
    out
}

pub const FD_EPS: f64 = 1e-3;
/// Entries whose analytic and numeric magnitude both fall below this are
/// compared absolutely; relative error is meaningless next to zero.
pub const FD_FLOOR: f64 = 1e-6;

#[derive(Debug, Default, Clone, Copy)]
pub struct FdSummary {
    pub checked: usize,
    pub skipped_kinks: usize,
    pub max_rel_err: f64,
}

/// Which parameter of which layer.
#[derive(Clone, Copy)]
pub enum Param {
    Weight(usize, usize),
    Bias(usize, usize),
}

fn param_mut(model: &mut MlpModel, p: Param) -> &mut f64 {
    match p {
        Param::Weight(l, i) => &mut model.layers[l].weights[i],
        Param::Bias(l, i) => &mut model.layers[l].bias[i],
    }
}

/// Central differences for every parameter against `analytic(param)`.
/// Perturbations that flip the sign of a hidden pre-activation straddle a
/// ReLU kink, where the derivative is undefined; those are skipped.
pub fn finite_difference_check(
    model: &MlpModel,
    batch: &[(Vec<f64>, usize)],
    l2: f64,
    analytic: impl Fn(Param) -> f64,
) -> FdSummary {
    let mut summary = FdSummary::default();
    let mut params = Vec::new();
    for (l, layer) in model.layers.iter().enumerate() {
        params.extend((0..layer.weights.len()).map(|i| Param::Weight(l, i)));
        params.extend((0..layer.bias.len()).map(|i| Param::Bias(l, i)));
    }
    let mut m = model.clone();
    for p in params {
        let orig = *param_mut(&mut m, p);
        *param_mut(&mut m, p) = orig + FD_EPS;
        let plus = reference_loss(&m, batch, l2);
        let pre_plus = hidden_preacts(&m, batch);
        *param_mut(&mut m, p) = orig - FD_EPS;
        let minus = reference_loss(&m, batch, l2);
        let pre_minus = hidden_preacts(&m, batch);
        *param_mut(&mut m, p) = orig;
        if pre_plus.iter().zip(&pre_minus).any(|(a, b)| (*a > 0.0) != (*b > 0.0)) {
            summary.skipped_kinks += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * FD_EPS);
        let a = analytic(p);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FD_FLOOR);
        summary.max_rel_err = summary.max_rel_err.max(rel);
        summary.checked += 1;
    }
    summary
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("IND_{i:02}")).collect()
}

/// A small random network with random biases and a random batch.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (MlpModel, Vec<(Vec<f64>, usize)>, f64) {
    let input = rng.random_range(2..7);
    let hidden: Vec<usize> = (0..rng.random_range(0..3)).map(|_| rng.random_range(2..7)).collect();
    let classes = rng.random_range(2..6);
    let mut model = glorot_init(input, &hidden, labels(classes), "fp", rng);
    for layer in &mut model.layers {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    let batch = (0..rng.random_range(1..6))
        .map(|_| {
            let x = (0..input).map(|_| f64::from(rng.random_range(-1.0f32..1.0))).collect();
            (x, rng.random_range(0..classes))
        })
        .collect();
    let l2 = [0.0, 1e-3, 0.1][rng.random_range(0..3)];
    (model, batch, l2)
}

pub fn to_f32_batch(batch: &[(Vec<f64>, usize)]) -> Vec<(EmbeddingVector, usize)> {
    batch
        .iter()
        .map(|(x, y)| (EmbeddingVector::new(x.iter().map(|v| *v as f32).collect()), *y))
        .collect()
}

// ---------------------------------------------------------------------------
// Product/service ranking.

pub fn reference_cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum();
    let na: f64 = a.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Every code scored, then a full stable sort: descending score,
/// ascending id.
pub fn brute_force_ranking(company: &[f32], codes: &[(String, EmbeddingVector)]) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = codes
        .iter()
        .map(|(id, v)| (id.clone(), reference_cosine(company, v.values())))
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    all
}

pub fn random_unit(rng: &mut impl Rng, dim: usize) -> EmbeddingVector {
    EmbeddingVector::new((0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()).normalized()
}

// ---------------------------------------------------------------------------
// Weak-labeling fixture.

/// Returns a fixed vector per exact text.
pub struct TableProvider {
    pub dim: usize,
    pub table: HashMap<String, Vec<f32>>,
}

impl EmbeddingProvider for TableProvider {
    fn fingerprint(&self) -> String {
        format!("table:dim={}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts
            .iter()
            .map(|t| EmbeddingVector::new(self.table[*t].clone()))
            .collect())
    }
}

pub struct WeakFixture {
    pub taxonomy: IndustryTaxonomy,
    pub mapping: SourceMapping,
    pub companies: Vec<CompanyRecord>,
    pub provider: TableProvider,
}

fn company(id: &str, triple: Option<(&str, &str, &str)>) -> CompanyRecord {
    CompanyRecord {
        id: id.into(),
        description: format!("{id} description"),
        source_codes: triple.map(|(s, g, c)| SourceCodeTriple::new(s, g, c)),
        ..Default::default()
    }
}

/// Four industries; the mapping reaches IND_A and IND_B, so similarity
/// candidates are IND_C = e3 and IND_D = e4.
///
/// | company | triple      | vector              | expected            |
/// |---------|-------------|---------------------|---------------------|
/// | c1      | S1/G1/C1    | e3 (matches IND_C)  | IND_A via mapping   |
/// | c2      | S1/G2/C2    | e4                  | IND_B via mapping   |
/// | c3      | S1/G1/C1    | e1                  | IND_A via mapping   |
/// | c4      | none        | (0, 0, .8, .6)      | IND_C, score 0.8    |
/// | c5      | S9/G9/C9    | (0, 0, .6, .8)      | IND_D, score 0.8    |
/// | c6      | none        | (.951, 0, .31, 0)   | dropped (0.31 < .5) |
pub fn weak_fixture() -> WeakFixture {
    let ind = |id: &str| IndustryCode {
        id: id.into(),
        name: id.into(),
        description: format!("{id} theme"),
    };
    let taxonomy = IndustryTaxonomy::new(vec![ind("IND_A"), ind("IND_B"), ind("IND_C"), ind("IND_D")]).unwrap();
    let mapping = SourceMapping::new(
        vec![
            (SourceCodeTriple::new("S1", "G1", "C1"), "IND_A".into()),
            (SourceCodeTriple::new("S1", "G2", "C2"), "IND_B".into()),
        ],
        &taxonomy,
    )
    .unwrap();
    let companies = vec![
        company("c1", Some(("S1", "G1", "C1"))),
        company("c2", Some(("S1", "G2", "C2"))),
        company("c3", Some(("S1", "G1", "C1"))),
        company("c4", None),
        company("c5", Some(("S9", "G9", "C9"))),
        company("c6", None),
    ];
    let c6_x = (1.0f64 - 0.31 * 0.31).sqrt() as f32;
    let table: HashMap<String, Vec<f32>> = [
        ("IND_A theme", [1.0, 0.0, 0.0, 0.0]),
        ("IND_B theme", [0.0, 1.0, 0.0, 0.0]),
        ("IND_C theme", [0.0, 0.0, 1.0, 0.0]),
        ("IND_D theme", [0.0, 0.0, 0.0, 1.0]),
        ("c1 description", [0.0, 0.0, 1.0, 0.0]),
        ("c2 description", [0.0, 0.0, 0.0, 1.0]),
        ("c3 description", [1.0, 0.0, 0.0, 0.0]),
        ("c4 description", [0.0, 0.0, 0.8, 0.6]),
        ("c5 description", [0.0, 0.0, 0.6, 0.8]),
        ("c6 description", [c6_x, 0.0, 0.31, 0.0]),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_vec()))
    .collect();
    WeakFixture {
        taxonomy,
        mapping,
        companies,
        provider: TableProvider { dim: 4, table },
    }
}

/// Hand-traced outcome of the fixture at thresh 0.5.
pub fn weak_fixture_expected() -> BTreeMap<&'static str, (&'static str, &'static str)> {
    [
        ("c1", ("IND_A", "mapping")),
        ("c2", ("IND_B", "mapping")),
        ("c3", ("IND_A", "mapping")),
        ("c4", ("IND_C", "similarity")),
        ("c5", ("IND_D", "similarity")),
    ]
    .into_iter()
    .collect()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

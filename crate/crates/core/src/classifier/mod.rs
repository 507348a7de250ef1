//! Multilayer perceptron over frozen text embeddings.
//!
//! Hidden layers are affine + ReLU, the output layer is affine + softmax.
//! Weights are kept in f64; embeddings arrive as f32 and are widened.

mod io;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingVector;

pub use io::{load_model, save_model, MODEL_VERSION};
pub use train::{
    compute_gradients, glorot_init, mean_loss, train_mlp, EpochRecord, Gradients, MlpHyperparams, Optimizer,
    TrainHistory,
};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("unknown class label {0:?}")]
    UnknownLabel(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unsupported model file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error(
        "provider fingerprint mismatch: model was trained with embeddings {model:?} but the provider is {provider:?}"
    )]
    FingerprintMismatch { model: String, provider: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ClassifierError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
}

/// Dense layer with a row-major `rows x cols` weight matrix
/// (`rows` outputs, `cols` inputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }

    pub(crate) fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            *o += row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    /// Forward over a sparse input given as `(column, value)` pairs.
    pub(crate) fn forward_sparse_into(&self, nz: &[(usize, f64)], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            *o += nz.iter().map(|&(c, x)| row[c] * x).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub input_dim: usize,
    pub class_labels: Vec<String>,
    pub layers: Vec<DenseLayer>,
    pub activation: Activation,
    pub provider_fingerprint: String,
}

impl MlpModel {
    /// An untrained model with zero weights; the output is uniform.
    pub fn zeros(input_dim: usize, hidden_dims: &[usize], class_labels: Vec<String>, fingerprint: &str) -> Self {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden_dims);
        dims.push(class_labels.len());
        let layers = dims.windows(2).map(|w| DenseLayer::zeros(w[1], w[0])).collect();
        Self {
            input_dim,
            class_labels,
            layers,
            activation: Activation::Relu,
            provider_fingerprint: fingerprint.to_owned(),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_labels.iter().position(|l| l == label)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Checks that the layer shapes chain from `input_dim` to the class
    /// count and that every parameter is finite.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(ClassifierError::InvalidModel("no layers".into()));
        }
        if self.class_labels.is_empty() {
            return Err(ClassifierError::InvalidModel("no class labels".into()));
        }
        let mut prev = self.input_dim;
        for (i, l) in self.layers.iter().enumerate() {
            if l.cols != prev || l.weights.len() != l.rows * l.cols || l.bias.len() != l.rows {
                return Err(ClassifierError::InvalidModel(format!(
                    "layer {i} has inconsistent shape"
                )));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(ClassifierError::InvalidModel(format!(
                    "layer {i} has non-finite parameters"
                )));
            }
            prev = l.rows;
        }
        if prev != self.class_labels.len() {
            return Err(ClassifierError::InvalidModel(format!(
                "output layer has {prev} units for {} classes",
                self.class_labels.len()
            )));
        }
        Ok(())
    }

    /// Fails (or only warns when `strict` is false) if the model was
    /// trained under a different embedding configuration.
    pub fn check_fingerprint(&self, provider_fingerprint: &str, strict: bool) -> Result<()> {
        if self.provider_fingerprint == provider_fingerprint {
            return Ok(());
        }
        if strict {
            Err(ClassifierError::FingerprintMismatch {
                model: self.provider_fingerprint.clone(),
                provider: provider_fingerprint.to_owned(),
            })
        } else {
            log::warn!(
                "model fingerprint {:?} differs from provider {:?}",
                self.provider_fingerprint,
                provider_fingerprint
            );
            Ok(())
        }
    }

    /// Logits for an input already widened to f64.
    pub(crate) fn logits(&self, x: &[f64]) -> Vec<f64> {
        let nz: Vec<(usize, f64)> = x.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect();
        self.logits_sparse(&nz)
    }

    pub(crate) fn logits_sparse(&self, nz: &[(usize, f64)]) -> Vec<f64> {
        let mut cur = Vec::new();
        let mut next = Vec::new();
        self.layers[0].forward_sparse_into(nz, &mut cur);
        for layer in &self.layers[1..] {
            relu_in_place(&mut cur);
            layer.forward_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    pub fn forward_f64(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        Ok(softmax(&self.logits(x)))
    }
}

pub(crate) fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Softmax with the row max subtracted first.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `log(sum(exp(z)))` computed stably.
pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln()
}

pub(crate) fn widen(x: &EmbeddingVector) -> Vec<f64> {
    x.values().iter().map(|&v| f64::from(v)).collect()
}

/// Class probabilities for one embedding.
pub fn forward(model: &MlpModel, x: &EmbeddingVector) -> Result<Vec<f64>> {
    model.forward_f64(&widen(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedClass {
    pub id: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopKPrediction {
    pub ranked: Vec<RankedClass>,
}

impl TopKPrediction {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.ranked.iter().map(|r| r.id.as_str())
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }
}

/// Ranks class probabilities: descending, ties by ascending class id.
pub fn rank_probabilities(labels: &[String], probs: &[f64], k: usize) -> TopKPrediction {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then_with(|| labels[a].cmp(&labels[b])));
    TopKPrediction {
        ranked: order
            .into_iter()
            .take(k)
            .map(|i| RankedClass {
                id: labels[i].clone(),
                prob: probs[i],
            })
            .collect(),
    }
}

/// The `min(k, classes)` most probable classes.
pub fn predict_topk(model: &MlpModel, x: &EmbeddingVector, k: usize) -> Result<TopKPrediction> {
    if k == 0 {
        return Err(ClassifierError::InvalidHyperparams("k must be >= 1".into()));
    }
    let probs = forward(model, x)?;
    Ok(rank_probabilities(&model.class_labels, &probs, k))
}

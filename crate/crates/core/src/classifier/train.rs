use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{log_sum_exp, relu_in_place, softmax, widen, ClassifierError, DenseLayer, MlpModel, Result};
use crate::embedding::EmbeddingVector;
use crate::weaklabel::LabeledDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpHyperparams {
    pub hidden_dims: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
    /// Epochs without a validation improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
    pub optimizer: Optimizer,
}

impl Default for MlpHyperparams {
    fn default() -> Self {
        Self {
            hidden_dims: vec![256],
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 32,
            l2: 1e-4,
            seed: 0,
            early_stop_patience: 10,
            optimizer: Optimizer::Adam,
        }
    }
}

impl MlpHyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ClassifierError::InvalidHyperparams(m));
        if self.hidden_dims.contains(&0) {
            return bad("hidden layer sizes must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 must be non-negative, got {}", self.l2));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

/// Gradients mirroring the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Self {
            layers: model.layers.iter().map(|l| DenseLayer::zeros(l.rows, l.cols)).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

/// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
pub fn glorot_init(
    input_dim: usize,
    hidden_dims: &[usize],
    class_labels: Vec<String>,
    fingerprint: &str,
    rng: &mut impl Rng,
) -> MlpModel {
    let mut model = MlpModel::zeros(input_dim, hidden_dims, class_labels, fingerprint);
    for layer in &mut model.layers {
        let limit = (6.0 / (layer.rows + layer.cols) as f64).sqrt();
        for w in &mut layer.weights {
            *w = rng.random_range(-limit..limit);
        }
    }
    model
}

struct Example {
    nz: Vec<(usize, f64)>,
    label: usize,
}

fn sparse(x: &[f32]) -> Vec<(usize, f64)> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, f64::from(*v)))
        .collect()
}

fn check_batch(model: &MlpModel, batch: &[(EmbeddingVector, usize)]) -> Result<()> {
    if batch.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    for (x, y) in batch {
        if x.dim() != model.input_dim {
            return Err(ClassifierError::DimensionMismatch {
                expected: model.input_dim,
                actual: x.dim(),
            });
        }
        if *y >= model.n_classes() {
            return Err(ClassifierError::UnknownLabel(y.to_string()));
        }
    }
    Ok(())
}

fn l2_penalty(model: &MlpModel, l2: f64) -> f64 {
    if l2 == 0.0 {
        return 0.0;
    }
    0.5 * l2 * model.layers.iter().flat_map(|l| &l.weights).map(|w| w * w).sum::<f64>()
}

/// Mean cross-entropy over the batch plus `l2/2 * sum(W^2)` (biases are
/// not penalized).
pub fn mean_loss(model: &MlpModel, batch: &[(EmbeddingVector, usize)], l2: f64) -> Result<f64> {
    check_batch(model, batch)?;
    let ce: f64 = batch
        .iter()
        .map(|(x, y)| {
            let z = model.logits(&widen(x));
            log_sum_exp(&z) - z[*y]
        })
        .sum::<f64>()
        / batch.len() as f64;
    Ok(ce + l2_penalty(model, l2))
}

/// Backprop for one example, accumulating `scale * dLoss/dparam` into
/// `grads`. Returns the example's cross-entropy.
fn accumulate(model: &MlpModel, ex: &Example, scale: f64, grads: &mut Gradients) -> f64 {
    let n = model.layers.len();
    // pre[i] holds the pre-activation output of layer i
    let mut pre: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut z = Vec::new();
    model.layers[0].forward_sparse_into(&ex.nz, &mut z);
    pre.push(z);
    for i in 1..n {
        let mut a = pre[i - 1].clone();
        relu_in_place(&mut a);
        let mut z = Vec::new();
        model.layers[i].forward_into(&a, &mut z);
        pre.push(z);
    }
    let logits = &pre[n - 1];
    let loss = log_sum_exp(logits) - logits[ex.label];

    let mut delta = softmax(logits);
    delta[ex.label] -= 1.0;
    for d in &mut delta {
        *d *= scale;
    }

    for i in (0..n).rev() {
        let layer = &model.layers[i];
        let g = &mut grads.layers[i];
        for (gb, d) in g.bias.iter_mut().zip(&delta) {
            *gb += d;
        }
        if i == 0 {
            for (r, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                let row = &mut g.weights[r * layer.cols..(r + 1) * layer.cols];
                for &(c, x) in &ex.nz {
                    row[c] += d * x;
                }
            }
            break;
        }
        let input = &pre[i - 1];
        for (r, d) in delta.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            let row = &mut g.weights[r * layer.cols..(r + 1) * layer.cols];
            for (gw, &zin) in row.iter_mut().zip(input) {
                if zin > 0.0 {
                    *gw += d * zin;
                }
            }
        }
        let mut prev = vec![0.0; layer.cols];
        for (r, d) in delta.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
            for (p, w) in prev.iter_mut().zip(row) {
                *p += d * w;
            }
        }
        for (p, &zin) in prev.iter_mut().zip(input) {
            if zin <= 0.0 {
                *p = 0.0;
            }
        }
        delta = prev;
    }
    loss
}

fn add_l2(model: &MlpModel, l2: f64, grads: &mut Gradients) {
    if l2 == 0.0 {
        return;
    }
    for (g, l) in grads.layers.iter_mut().zip(&model.layers) {
        for (gw, w) in g.weights.iter_mut().zip(&l.weights) {
            *gw += l2 * w;
        }
    }
}

fn batch_gradients(model: &MlpModel, batch: &[&Example], l2: f64) -> (f64, Gradients) {
    let mut grads = Gradients::zeros_like(model);
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for ex in batch {
        loss += accumulate(model, ex, scale, &mut grads);
    }
    add_l2(model, l2, &mut grads);
    (loss * scale + l2_penalty(model, l2), grads)
}

/// Gradient of [`mean_loss`] with respect to every weight and bias.
pub fn compute_gradients(model: &MlpModel, batch: &[(EmbeddingVector, usize)], l2: f64) -> Result<(f64, Gradients)> {
    check_batch(model, batch)?;
    let examples: Vec<Example> = batch
        .iter()
        .map(|(x, y)| Example {
            nz: sparse(x.values()),
            label: *y,
        })
        .collect();
    let refs: Vec<&Example> = examples.iter().collect();
    Ok(batch_gradients(model, &refs, l2))
}

struct AdamState {
    m: Vec<DenseLayer>,
    v: Vec<DenseLayer>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn apply_update(model: &mut MlpModel, grads: &Gradients, lr: f64, adam: Option<&mut AdamState>) {
    match adam {
        None => {
            for (l, g) in model.layers.iter_mut().zip(&grads.layers) {
                for (w, gw) in l.weights.iter_mut().zip(&g.weights) {
                    *w -= lr * gw;
                }
                for (b, gb) in l.bias.iter_mut().zip(&g.bias) {
                    *b -= lr * gb;
                }
            }
        }
        Some(state) => {
            state.t += 1;
            let c1 = 1.0 - BETA1.powi(state.t);
            let c2 = 1.0 - BETA2.powi(state.t);
            let step = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
            };
            for (i, (l, g)) in model.layers.iter_mut().zip(&grads.layers).enumerate() {
                let (m, v) = (&mut state.m[i], &mut state.v[i]);
                for j in 0..l.weights.len() {
                    step(&mut l.weights[j], g.weights[j], &mut m.weights[j], &mut v.weights[j]);
                }
                for j in 0..l.bias.len() {
                    step(&mut l.bias[j], g.bias[j], &mut m.bias[j], &mut v.bias[j]);
                }
            }
        }
    }
}

fn accuracy(model: &MlpModel, data: &[Example]) -> f64 {
    let correct = data
        .iter()
        .filter(|ex| {
            let z = model.logits_sparse(&ex.nz);
            // same tie rule as ranking: highest score, then smallest label
            let best = (0..z.len())
                .max_by(|&a, &b| {
                    z[a].total_cmp(&z[b])
                        .then_with(|| model.class_labels[b].cmp(&model.class_labels[a]))
                })
                .expect("at least one class");
            best == ex.label
        })
        .count();
    correct as f64 / data.len() as f64
}

fn to_examples(data: &LabeledDataset, labels: &[String], dim: usize) -> Result<Vec<Example>> {
    data.examples
        .iter()
        .map(|e| {
            if e.embedding.dim() != dim {
                return Err(ClassifierError::DimensionMismatch {
                    expected: dim,
                    actual: e.embedding.dim(),
                });
            }
            let label = labels
                .binary_search(&e.label)
                .map_err(|_| ClassifierError::UnknownLabel(e.label.clone()))?;
            Ok(Example {
                nz: sparse(e.embedding.values()),
                label,
            })
        })
        .collect()
}

/// Trains a fresh model on `train`, tracking top-1 accuracy on `valid`.
///
/// Classes are the sorted labels of `train`; validation examples with a
/// label unseen in training count as misses. Fully deterministic for a
/// given `(train, valid, hp)`.
pub fn train_mlp(
    train: &LabeledDataset,
    valid: &LabeledDataset,
    hp: &MlpHyperparams,
    provider_fingerprint: &str,
) -> Result<(MlpModel, TrainHistory)> {
    hp.validate()?;
    let dim = train.dim().ok_or(ClassifierError::EmptyDataset)?;
    let labels = train.class_labels.clone();
    let train_ex = to_examples(train, &labels, dim)?;
    let valid_ex: Vec<Example> = valid
        .examples
        .iter()
        .map(|e| {
            if e.embedding.dim() != dim {
                return Err(ClassifierError::DimensionMismatch {
                    expected: dim,
                    actual: e.embedding.dim(),
                });
            }
            Ok(Example {
                nz: sparse(e.embedding.values()),
                label: labels.binary_search(&e.label).unwrap_or(usize::MAX),
            })
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut model = glorot_init(dim, &hp.hidden_dims, labels, provider_fingerprint, &mut rng);
    let mut adam = match hp.optimizer {
        Optimizer::Sgd => None,
        Optimizer::Adam => Some(AdamState {
            m: Gradients::zeros_like(&model).layers,
            v: Gradients::zeros_like(&model).layers,
            t: 0,
        }),
    };

    let mut history = TrainHistory::default();
    let mut best: Option<(f64, usize, MlpModel)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train_ex.len()).collect();
    for epoch in 1..=hp.epochs {
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(hp.batch_size).enumerate() {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_ex[i]).collect();
            let (loss, grads) = batch_gradients(&model, &batch, hp.l2);
            if !loss.is_finite() {
                return Err(ClassifierError::NonFiniteLoss { epoch, batch: b });
            }
            apply_update(&mut model, &grads, hp.learning_rate, adam.as_mut());
        }

        let all: Vec<&Example> = train_ex.iter().collect();
        let train_loss = epoch_loss(&model, &all, hp.l2);
        if !train_loss.is_finite() {
            return Err(ClassifierError::NonFiniteLoss { epoch, batch: 0 });
        }
        let valid_accuracy = (!valid_ex.is_empty()).then(|| accuracy(&model, &valid_ex));
        log::debug!("epoch {epoch}: loss {train_loss:.6} valid {valid_accuracy:?}");
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            valid_accuracy,
        });

        if let Some(acc) = valid_accuracy {
            if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                best = Some((acc, epoch, model.clone()));
                since_best = 0;
            } else {
                since_best += 1;
            }
            if hp.early_stop_patience > 0 && since_best >= hp.early_stop_patience {
                let (_, best_epoch, best_model) = best.take().expect("set on first epoch");
                log::info!("early stop at epoch {epoch}; restoring epoch {best_epoch}");
                history.best_epoch = Some(best_epoch);
                history.stopped_early = true;
                return Ok((best_model, history));
            }
        }
    }
    history.best_epoch = best.map(|(_, e, _)| e);
    Ok((model, history))
}

fn epoch_loss(model: &MlpModel, data: &[&Example], l2: f64) -> f64 {
    let ce: f64 = data
        .iter()
        .map(|ex| {
            let z = model.logits_sparse(&ex.nz);
            log_sum_exp(&z) - z[ex.label]
        })
        .sum();
    ce / data.len() as f64 + l2_penalty(model, l2)
}

//! Hierarchical industry and product/service code classification.
//!
//! A company description is embedded once; an MLP over the embedding ranks
//! custom industry codes, and within each of the top industries the
//! product/service codes are ranked by cosine similarity of their
//! descriptions. Training data comes from weak labels: a source-taxonomy
//! mapping where it applies, thresholded description similarity elsewhere.

pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod eval;
pub mod pscode;
pub mod taxonomy;
pub mod weaklabel;

pub use classifier::{forward, predict_topk, train_mlp, MlpHyperparams, MlpModel, TopKPrediction};
pub use embedding::{cosine_similarity, EmbeddingProvider, EmbeddingVector, ProviderConfig};
pub use pscode::{classify_company, predict_ps_codes, HierarchicalClassifier, Prediction, PsIndex};
pub use weaklabel::{build_labeled_dataset, split_dataset, LabeledDataset, WeakLabelConfig};

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Activation, ClassifierError, DenseLayer, MlpModel, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    input_dim: usize,
    activation: Activation,
    class_labels: Vec<String>,
    provider_fingerprint: String,
    layers: Vec<DenseLayer>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

pub fn model_to_json(model: &MlpModel) -> String {
    let file = ModelFile {
        version: MODEL_VERSION,
        input_dim: model.input_dim,
        activation: model.activation,
        class_labels: model.class_labels.clone(),
        provider_fingerprint: model.provider_fingerprint.clone(),
        layers: model.layers.clone(),
    };
    serde_json::to_string(&file).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<MlpModel> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| ClassifierError::CorruptFile(e.to_string()))?;
    if probe.version != MODEL_VERSION {
        return Err(ClassifierError::VersionMismatch {
            found: probe.version,
            expected: MODEL_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_str(text).map_err(|e| ClassifierError::CorruptFile(e.to_string()))?;
    let model = MlpModel {
        input_dim: file.input_dim,
        class_labels: file.class_labels,
        layers: file.layers,
        activation: file.activation,
        provider_fingerprint: file.provider_fingerprint,
    };
    model
        .validate()
        .map_err(|e| ClassifierError::CorruptFile(e.to_string()))?;
    Ok(model)
}

pub fn save_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data_store::IOEnvelope;
use crate::model_library::ModelCard;

/// Why a single task did not produce output.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{code}: {message}")]
pub struct TaskError {
    pub code: String,
    pub message: String,
}

impl TaskError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

/// Something that can stand in for model inference.
pub trait ModelExecutor: Send + Sync {
    fn model_name(&self) -> &str;
    fn latency_ms(&self) -> f64;
    fn run(&self, inputs: &[IOEnvelope], params: &BTreeMap<String, String>) -> Result<IOEnvelope, TaskError>;
}

/// Deterministic executor driven entirely by a model card.
#[derive(Debug, Clone)]
pub struct SimulatedExecutor {
    card: ModelCard,
}

impl SimulatedExecutor {
    pub fn new(card: ModelCard) -> Self {
        Self { card }
    }
}

impl ModelExecutor for SimulatedExecutor {
    fn model_name(&self) -> &str {
        &self.card.model_name
    }

    fn latency_ms(&self) -> f64 {
        self.card.latency_ms
    }

    fn run(&self, inputs: &[IOEnvelope], params: &BTreeMap<String, String>) -> Result<IOEnvelope, TaskError> {
        simulated_run(&self.card, inputs, params)
    }
}

/// Content hash standing in for inference output.
///
/// Hash input: each input payload's hex SHA-256 (sorted, newline
/// terminated), then `model:<name>\n`, then the params as JSON.
pub fn output_payload(model_name: &str, inputs: &[IOEnvelope], params: &BTreeMap<String, String>) -> Vec<u8> {
    let mut input_hashes: Vec<String> = inputs.iter().map(|e| hex::encode(Sha256::digest(&e.payload))).collect();
    input_hashes.sort();
    let mut h = Sha256::new();
    for ih in &input_hashes {
        h.update(ih.as_bytes());
        h.update(b"\n");
    }
    h.update(b"model:");
    h.update(model_name.as_bytes());
    h.update(b"\n");
    h.update(serde_json::to_string(params).unwrap_or_default().as_bytes());
    h.finalize().to_vec()
}

/// Runs `card` over `inputs`: every input modality must be consumed by the
/// card, the output takes the lexicographically first produced modality, and
/// the trace extends the input traces with this model.
pub fn simulated_run(
    card: &ModelCard,
    inputs: &[IOEnvelope],
    params: &BTreeMap<String, String>,
) -> Result<IOEnvelope, TaskError> {
    if let Some(bad) = inputs.iter().find(|e| !card.consumes.contains(&e.modality)) {
        return Err(TaskError::new(
            "ModalityMismatch",
            format!(
                "model {} does not consume modality {} of input {}",
                card.model_name, bad.modality, bad.data_name
            ),
        ));
    }
    let modality = card.produces.iter().next().ok_or_else(|| {
        TaskError::new("NoOutputModality", format!("model {} produces no modality", card.model_name))
    })?;
    let mut trace: Vec<String> = inputs.iter().flat_map(|e| e.trace.iter().cloned()).collect();
    trace.push(card.model_name.clone());
    Ok(IOEnvelope {
        data_name: String::new(),
        modality: modality.clone(),
        payload: output_payload(&card.model_name, inputs, params),
        trace,
    })
}

//! Versioned JSON checkpoints.
//!
//! Layout (version 1):
//!
//! ```text
//! {
//!   "format": "cellfree-gnn-checkpoint",
//!   "version": 1,
//!   "config": { ModelConfig },
//!   "norm": { "mean": f64, "std": f64 },
//!   "shapes": [[rows, cols], ...],        // one per tensor, in GnnModel::tensors order
//!   "parameters": [f64, ...],             // all tensors flattened row-major
//!   "train_config_digest": "hex sha-256 or empty"
//! }
//! ```
//!
//! Floats carry 17 significant digits, so loading restores every parameter
//! bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::graph::FeatureNorm;
use super::model::{init_model, GnnModel, ModelConfig};
use crate::error::{Error, Result};
use crate::precise;

pub const CHECKPOINT_FORMAT: &str = "cellfree-gnn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct NormRecord {
    #[serde(serialize_with = "precise::serialize")]
    mean: f64,
    #[serde(serialize_with = "precise::serialize")]
    std: f64,
}

#[derive(Serialize, Deserialize)]
pub struct ModelCheckpoint {
    format: String,
    version: u32,
    config: ModelConfig,
    norm: NormRecord,
    shapes: Vec<[usize; 2]>,
    #[serde(serialize_with = "precise::serialize")]
    parameters: Vec<f64>,
    #[serde(default)]
    train_config_digest: String,
}

impl ModelCheckpoint {
    pub fn from_model(model: &GnnModel, train_config_digest: &str) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: model.config.clone(),
            norm: NormRecord {
                mean: model.norm.mean,
                std: model.norm.std,
            },
            shapes: model
                .tensors()
                .iter()
                .map(|t| [t.rows(), t.cols()])
                .collect(),
            parameters: model.flat_params(),
            train_config_digest: train_config_digest.into(),
        }
    }

    pub fn train_config_digest(&self) -> &str {
        &self.train_config_digest
    }

    pub fn into_model(self) -> Result<GnnModel> {
        let mut model = init_model(self.config, 0)?;
        let expected: Vec<[usize; 2]> = model
            .tensors()
            .iter()
            .map(|t| [t.rows(), t.cols()])
            .collect();
        if expected != self.shapes {
            return Err(Error::Checkpoint(format!(
                "tensor shapes {:?} do not match the configured model {:?}",
                self.shapes, expected
            )));
        }
        model.set_flat_params(&self.parameters)?;
        if !model.is_finite() {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        model.norm = FeatureNorm {
            mean: self.norm.mean,
            std: self.norm.std,
        };
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(s)
            .map_err(|e| Error::Checkpoint(format!("not valid JSON: {e}")))?;
        let format = raw.get("format").and_then(|f| f.as_str());
        if format != Some(CHECKPOINT_FORMAT) {
            return Err(Error::Checkpoint(format!(
                "unknown format {format:?}, expected {CHECKPOINT_FORMAT:?}"
            )));
        }
        let version = raw.get("version").and_then(|v| v.as_u64());
        if version != Some(u64::from(CHECKPOINT_VERSION)) {
            return Err(Error::Checkpoint(format!(
                "unsupported version {version:?}, this build reads version {CHECKPOINT_VERSION}"
            )));
        }
        serde_json::from_str(s)
            .map_err(|e| Error::Checkpoint(format!("version {CHECKPOINT_VERSION} layout: {e}")))
    }
}

pub fn save_checkpoint(model: &GnnModel, digest: &str, path: &Path) -> Result<()> {
    std::fs::write(path, ModelCheckpoint::from_model(model, digest).to_json()?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(GnnModel, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
    let ckpt = ModelCheckpoint::from_json(&text)?;
    let digest = ckpt.train_config_digest.clone();
    Ok((ckpt.into_model()?, digest))
}

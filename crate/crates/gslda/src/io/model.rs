use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cascade::{CascadeModel, Cumulative, Method, NodeClassifier, NodeGoal, StageRates, Termination};
use crate::error::{Error, Result};
use crate::features::HaarFeature;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub method: Method,
    pub goal: NodeGoal,
    pub seed: u64,
    pub termination: Termination,
}

/// On-disk model. Floats are written in shortest round-trip form, so a
/// loaded model makes bit-identical decisions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub base_window: usize,
    pub feature_pool: Vec<HaarFeature>,
    pub nodes: Vec<NodeClassifier>,
    pub stage_rates: Vec<StageRates>,
    pub cumulative: Vec<Cumulative>,
    pub f_target: f64,
    pub metadata: Option<TrainingMetadata>,
}

impl ModelFile {
    pub fn new(model: &CascadeModel, metadata: Option<TrainingMetadata>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            base_window: model.base_window,
            feature_pool: model.feature_pool.clone(),
            nodes: model.nodes.clone(),
            stage_rates: model.stage_rates.clone(),
            cumulative: model.cumulative.clone(),
            f_target: model.f_target,
            metadata,
        }
    }

    pub fn model(&self) -> CascadeModel {
        CascadeModel {
            base_window: self.base_window,
            feature_pool: self.feature_pool.clone(),
            nodes: self.nodes.clone(),
            stage_rates: self.stage_rates.clone(),
            cumulative: self.cumulative.clone(),
            f_target: self.f_target,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        for (i, f) in self.feature_pool.iter().enumerate() {
            if f.base_window != self.base_window || f.validate().is_err() {
                return Err(format!("feature_pool[{i}]: invalid feature"));
            }
        }
        for (k, node) in self.nodes.iter().enumerate() {
            if node.coefficients.len() != node.stumps.len() {
                return Err(format!("nodes[{k}].coefficients: length differs from stumps"));
            }
            for (t, s) in node.stumps.iter().enumerate() {
                if s.feature_id >= self.feature_pool.len() {
                    return Err(format!("nodes[{k}].stumps[{t}].feature_id: out of range"));
                }
                if s.polarity != 1 && s.polarity != -1 {
                    return Err(format!("nodes[{k}].stumps[{t}].polarity: must be 1 or -1"));
                }
            }
        }
        if self.stage_rates.len() != self.nodes.len() {
            return Err("stage_rates: length differs from nodes".into());
        }
        if self.cumulative.len() != self.nodes.len() {
            return Err("cumulative: length differs from nodes".into());
        }
        Ok(())
    }
}

pub fn model_to_string(file: &ModelFile) -> Result<String> {
    let mut s = serde_json::to_string_pretty(file)?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_str(text: &str) -> Result<ModelFile> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let version = value
        .get("format_version")
        .ok_or_else(|| Error::Schema("missing field `format_version`".into()))?
        .as_u64()
        .ok_or_else(|| Error::Schema("field `format_version` must be an integer".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(Error::UnknownVersion(version.min(u64::from(u32::MAX)) as u32));
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    file.check().map_err(Error::Schema)?;
    Ok(file)
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<()> {
    fs::write(path, model_to_string(file)?).map_err(|e| Error::file(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    model_from_str(&text).map_err(|e| match e {
        Error::UnknownVersion(_) => e,
        other => Error::file(path, other),
    })
}

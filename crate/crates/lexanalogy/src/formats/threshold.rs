//! Threshold model file: a single JSON object.

use std::path::Path;

use lexanalogy_core::analogy::ThresholdModel;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    method: String,
    threshold: f64,
    dev_accuracy: f64,
}

pub fn write_threshold_model(model: &ThresholdModel, path: &Path) -> Result<()> {
    let file = ModelFile {
        method: model.method.as_str().into(),
        threshold: model.threshold,
        dev_accuracy: model.dev_accuracy,
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::io(path, e.into()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_threshold_model(path: &Path) -> Result<ThresholdModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::record(path, e.line(), format!("malformed threshold model: {e}")))?;
    let method = file
        .method
        .parse()
        .map_err(|_| Error::record(path, 1, format!("unknown method {:?}", file.method)))?;
    Ok(ThresholdModel {
        method,
        threshold: file.threshold,
        dev_accuracy: file.dev_accuracy,
    })
}

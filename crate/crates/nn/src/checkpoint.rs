use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::layers::LayerSpec;
use crate::param::ParamStore;
use crate::tensor::Tensor;

pub const CHECKPOINT_FORMAT: &str = "gatenav-nn-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Self-describing JSON checkpoint: layer specs, free-form metadata, the
/// seed used at construction, and every parameter as a flat array.
///
/// Floats are written in shortest round-trip form and parsed exactly, so a
/// write/read cycle reproduces every weight bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub model: String,
    pub seed: u64,
    pub layers: Vec<(String, LayerSpec)>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
    pub params: Vec<ParamRecord>,
}

impl Checkpoint {
    pub fn new(model: impl Into<String>, seed: u64, layers: Vec<(String, LayerSpec)>, store: &ParamStore) -> Self {
        let params = store
            .iter()
            .map(|p| ParamRecord {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                data: p.value.data().to_vec(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            model: model.into(),
            seed,
            layers,
            meta: BTreeMap::new(),
            params,
        }
    }

    /// Copies weights into a store built with the same architecture.
    pub fn load_into(&self, store: &mut ParamStore) -> Result<()> {
        if self.params.len() != store.len() {
            return Err(NnError::Checkpoint(format!(
                "checkpoint has {} parameters, model expects {}",
                self.params.len(),
                store.len()
            )));
        }
        for rec in &self.params {
            let id = store
                .find(&rec.name)
                .ok_or_else(|| NnError::Checkpoint(format!("unknown parameter '{}'", rec.name)))?;
            let p = store.get_mut(id);
            if p.value.shape() != rec.shape.as_slice() {
                return Err(NnError::Checkpoint(format!(
                    "parameter '{}' has shape {:?} in checkpoint but {:?} in model",
                    rec.name,
                    rec.shape,
                    p.value.shape()
                )));
            }
            p.value = Tensor::from_vec(rec.shape.clone(), rec.data.clone())?;
        }
        Ok(())
    }

    pub fn meta_value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .meta
            .get(key)
            .ok_or_else(|| NnError::Checkpoint(format!("missing metadata key '{key}'")))?;
        raw.parse()
            .map_err(|_| NnError::Checkpoint(format!("metadata '{key}' has invalid value '{raw}'")))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(s)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(NnError::Checkpoint(format!(
                "unsupported checkpoint format '{}', expected '{CHECKPOINT_FORMAT}'",
                ck.format
            )));
        }
        for (name, spec) in &ck.layers {
            spec.validate()
                .map_err(|e| NnError::Checkpoint(format!("layer '{name}': {e}")))?;
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

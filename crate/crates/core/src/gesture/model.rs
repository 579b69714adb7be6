use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gesture::{GestureKind, Mlp};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

/// A trained classifier as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub format_version: u32,
    pub kind: GestureKind,
    pub layer_sizes: Vec<usize>,
    pub labels: Vec<String>,
    pub network: Mlp,
    pub training: TrainingMeta,
}

impl ClassifierModel {
    pub fn new(kind: GestureKind, labels: Vec<String>, network: Mlp, training: TrainingMeta) -> Result<Self> {
        let m = Self {
            format_version: MODEL_FORMAT_VERSION,
            kind,
            layer_sizes: network.sizes(),
            labels,
            network,
            training,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!("unsupported model format version {}", self.format_version)));
        }
        self.network.validate()?;
        if self.network.sizes() != self.layer_sizes {
            return Err(Error::Model("layer_sizes does not match the stored weights".into()));
        }
        if self.labels.len() != self.network.output_size() {
            return Err(Error::Model(format!(
                "{} labels for {} outputs",
                self.labels.len(),
                self.network.output_size()
            )));
        }
        Ok(())
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn probabilities(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.network.forward(features)
    }

    /// Most probable class and its probability; lowest index wins ties.
    pub fn predict(&self, features: &[f64]) -> Result<(usize, f64)> {
        let p = self.probabilities(features)?;
        let mut best = 0;
        for (i, v) in p.iter().enumerate() {
            if *v > p[best] {
                best = i;
            }
        }
        Ok((best, p[best]))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s).map_err(|e| Error::Model(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

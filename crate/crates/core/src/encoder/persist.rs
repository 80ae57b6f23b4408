use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{EncoderWeights, TrainConfig, TrainedEncoder};
use crate::binning::BinningModel;
use crate::error::{shape_err, Error, Result};

/// On-disk form of a trained encoder. Floats round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderFile {
    pub d: usize,
    pub d_prime: usize,
    pub k: usize,
    pub feature_index: usize,
    pub lo: f64,
    pub hi: f64,
    /// Row-major D×D′.
    pub weights: Vec<f64>,
    pub train_config: TrainConfig,
    pub seed: u64,
    pub validation_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl EncoderFile {
    pub fn from_trained(trained: &TrainedEncoder, config: Option<serde_json::Value>) -> Self {
        let w = &trained.weights.w;
        EncoderFile {
            d: w.nrows(),
            d_prime: w.ncols(),
            k: trained.binning.k,
            feature_index: trained.binning.feature_index,
            lo: trained.binning.lo,
            hi: trained.binning.hi,
            weights: w.iter().copied().collect(),
            train_config: trained.config.clone(),
            seed: trained.config.seed,
            validation_loss: trained.validation_loss,
            config,
        }
    }

    pub fn weights(&self) -> Result<EncoderWeights> {
        let w = Array2::from_shape_vec((self.d, self.d_prime), self.weights.clone()).map_err(|_| {
            shape_err(format!(
                "encoder file declares {}x{} weights but holds {}",
                self.d,
                self.d_prime,
                self.weights.len()
            ))
        })?;
        Ok(EncoderWeights::new(w))
    }

    pub fn binning(&self) -> BinningModel {
        BinningModel {
            feature_index: self.feature_index,
            k: self.k,
            lo: self.lo,
            hi: self.hi,
            degenerate: self.lo == self.hi,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: EncoderFile = serde_json::from_str(text)?;
        file.weights()?;
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.context(path.display().to_string()))
    }
}

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{ErrorTriple, Metric};
use super::stats::{MetricSummary, SignificanceTest};
use crate::dataset::Target;
use crate::error::{Error, Result};
use crate::noise::NoiseLevel;
use crate::regressors::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Regressor fitted on X.
    Baseline,
    /// Regressor fitted on the augmented X′.
    Noro,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Baseline, Variant::Noro];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Noro => "noro",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSpace {
    Original,
    Augmented,
}

impl FeatureSpace {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSpace::Original => "original",
            FeatureSpace::Augmented => "augmented",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub target: Target,
    pub model: ModelKind,
    pub snr: NoiseLevel,
    pub variant: Variant,
    pub rmse: MetricSummary,
    pub mae: MetricSummary,
    pub median_ae: MetricSummary,
    pub trials: usize,
    /// Fold-averaged errors of each trial, in trial order.
    pub trial_values: Vec<ErrorTriple>,
}

impl CellReport {
    pub fn get(&self, metric: Metric) -> MetricSummary {
        match metric {
            Metric::Rmse => self.rmse,
            Metric::Mae => self.mae,
            Metric::MedianAe => self.median_ae,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeReport {
    pub target: Target,
    pub model: ModelKind,
    pub snr: NoiseLevel,
    pub metric: Metric,
    pub delta_hat: f64,
    pub sigma_hat: f64,
    pub significant: bool,
    /// Absent when there are fewer than two trials.
    pub p: Option<f64>,
    pub test: SignificanceTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub space: FeatureSpace,
    pub noisy: bool,
    pub snr: NoiseLevel,
    pub silhouette: f64,
    pub ch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config_echo: serde_json::Value,
    pub per_cell: Vec<CellReport>,
    pub relative: Vec<RelativeReport>,
    pub cluster_quality: Vec<ClusterReport>,
}

/// One projected test row for the feature-space scatter plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaPoint {
    pub space: FeatureSpace,
    pub snr: NoiseLevel,
    pub row: usize,
    pub bin: usize,
    pub pc1: f64,
    pub pc2: f64,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

impl ExperimentReport {
    pub fn cell(&self, target: Target, model: ModelKind, snr: NoiseLevel, variant: Variant) -> Option<&CellReport> {
        self.per_cell
            .iter()
            .find(|c| c.target == target && c.model == model && c.snr == snr && c.variant == variant)
    }

    pub fn relative_entry(&self, target: Target, model: ModelKind, snr: NoiseLevel, metric: Metric) -> Option<&RelativeReport> {
        self.relative
            .iter()
            .find(|r| r.target == target && r.model == model && r.snr == snr && r.metric == metric)
    }

    pub fn cluster(&self, space: FeatureSpace, snr: NoiseLevel) -> Option<&ClusterReport> {
        self.cluster_quality.iter().find(|c| c.space == space && c.snr == snr)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_json()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.context(path.display().to_string()))
    }

    /// Flat table, one row per cell. Relative-error columns are filled on `noro` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        writeln!(out, "# config={}", serde_json::to_string(&self.config_echo)?).ok();
        out.push_str("target,model,snr,variant,trials,rmse_mean,rmse_std,mae_mean,mae_std,median_ae_mean,median_ae_std");
        for metric in Metric::ALL {
            write!(out, ",{m}_delta_hat,{m}_sigma_hat,{m}_significant,{m}_p", m = metric.as_str()).ok();
        }
        out.push('\n');
        for cell in &self.per_cell {
            write!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                cell.target,
                cell.model,
                cell.snr,
                cell.variant.as_str(),
                cell.trials,
                cell.rmse.mean,
                cell.rmse.std,
                cell.mae.mean,
                cell.mae.std,
                cell.median_ae.mean,
                cell.median_ae.std
            )
            .ok();
            for metric in Metric::ALL {
                match (cell.variant, self.relative_entry(cell.target, cell.model, cell.snr, metric)) {
                    (Variant::Noro, Some(r)) => {
                        let p = r.p.map(|p| p.to_string()).unwrap_or_default();
                        write!(out, ",{},{},{},{}", r.delta_hat, r.sigma_hat, r.significant, p).ok();
                    }
                    _ => out.push_str(",,,,"),
                }
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_csv()?)
    }
}

pub fn pca_csv(points: &[PcaPoint], config_echo: &serde_json::Value) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "# config={}", serde_json::to_string(config_echo)?).ok();
    out.push_str("space,snr,row,bin,pc1,pc2\n");
    for p in points {
        writeln!(out, "{},{},{},{},{},{}", p.space.as_str(), p.snr, p.row, p.bin, p.pc1, p.pc2).ok();
    }
    Ok(out)
}

pub fn save_pca_csv(path: impl AsRef<Path>, points: &[PcaPoint], config_echo: &serde_json::Value) -> Result<()> {
    write_file(path.as_ref(), &pca_csv(points, config_echo)?)
}

//! Experiment configuration: TOML file, then command-line overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use noro_core::dataset::Target;
use noro_core::encoder::{AlphaConvention, TrainConfig};
use noro_core::evaluation::{PipelineConfig, SignificanceTest};
use noro_core::noise::{NoiseLevel, PowerScope};
use noro_core::regressors::{Hyperparameters, ModelKind};
use noro_core::selection::ForestParams;
use noro_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetChoice {
    Motor,
    Total,
    #[default]
    Both,
}

impl TargetChoice {
    pub fn targets(self) -> Vec<Target> {
        match self {
            TargetChoice::Motor => vec![Target::Motor],
            TargetChoice::Total => vec![Target::Total],
            TargetChoice::Both => Target::ALL.to_vec(),
        }
    }
}

impl FromStr for TargetChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "motor" => Ok(TargetChoice::Motor),
            "total" => Ok(TargetChoice::Total),
            "both" => Ok(TargetChoice::Both),
            other => Err(Error::Config(format!("unknown target `{other}` (valid: motor, total, both)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub trials: usize,
    pub forest: ForestParams,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            trials: 10,
            forest: ForestParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub epochs_per_fold: usize,
    pub learning_rate: f64,
    pub grad_clip: f64,
    pub d_prime: Option<usize>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        EncoderConfig {
            epochs_per_fold: t.epochs_per_fold,
            learning_rate: t.learning_rate,
            grad_clip: t.grad_clip,
            d_prime: t.d_prime,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset_path: PathBuf,
    pub target: TargetChoice,
    pub bins: usize,
    pub snr: Vec<NoiseLevel>,
    pub models: Vec<ModelKind>,
    pub trials: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Only the first `folds` rotations are evaluated; all by default.
    pub folds: Option<usize>,
    /// Binning feature by name; chosen by feature selection when absent.
    pub binning_feature: Option<String>,
    pub denormalize: bool,
    pub subject_disjoint: bool,
    pub alpha_convention: AlphaConvention,
    pub power_scope: PowerScope,
    pub significance: SignificanceTest,
    pub significance_level: f64,
    pub pca: bool,
    pub selection: SelectionConfig,
    pub encoder: EncoderConfig,
    pub hyper: Hyperparameters,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let pipeline = PipelineConfig::default();
        ExperimentConfig {
            dataset_path: PathBuf::from("data/parkinsons_updrs.data"),
            target: TargetChoice::Both,
            bins: 5,
            snr: pipeline.snr_levels,
            models: pipeline.models,
            trials: pipeline.trials,
            base_seed: pipeline.base_seed,
            output_dir: PathBuf::from("noro-out"),
            folds: None,
            binning_feature: None,
            denormalize: false,
            subject_disjoint: false,
            alpha_convention: AlphaConvention::AnchorRow,
            power_scope: PowerScope::Corrupted,
            significance: SignificanceTest::Welch,
            significance_level: pipeline.significance_level,
            pca: true,
            selection: SelectionConfig::default(),
            encoder: EncoderConfig::default(),
            hyper: Hyperparameters::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim().replace('\n', " ")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.bins == 0 {
            return fail("bins must be at least 1");
        }
        if self.models.is_empty() {
            return fail("models must not be empty");
        }
        if self.snr.is_empty() {
            return fail("snr list must not be empty (use `none` for clean data)");
        }
        if self.folds == Some(0) {
            return fail("folds must be at least 1");
        }
        if self.selection.trials == 0 {
            return fail("selection.trials must be at least 1");
        }
        if self.encoder.epochs_per_fold == 0 {
            return fail("encoder.epochs_per_fold must be at least 1");
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            k: self.bins,
            epochs_per_fold: self.encoder.epochs_per_fold,
            learning_rate: self.encoder.learning_rate,
            grad_clip: self.encoder.grad_clip,
            seed: self.base_seed,
            d_prime: self.encoder.d_prime,
            alpha_convention: self.alpha_convention,
            ..TrainConfig::default()
        }
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            targets: self.target.targets(),
            models: self.models.clone(),
            hyper: self.hyper.clone(),
            snr_levels: self.snr.clone(),
            trials: self.trials,
            base_seed: self.base_seed,
            folds: self.folds,
            power_scope: self.power_scope,
            significance: self.significance,
            significance_level: self.significance_level,
            denormalize: self.denormalize,
            cluster_quality: true,
            pca: self.pca,
        }
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn encoder_path(&self) -> PathBuf {
        self.output_dir.join("encoder.json")
    }

    pub fn importance_path(&self) -> PathBuf {
        self.output_dir.join("feature_importance.json")
    }

    pub fn report_path(&self) -> PathBuf {
        self.output_dir.join("report.json")
    }
}

/// Parses `10,20,30`, `none`, or a mix.
pub fn parse_snr_list(s: &str) -> Result<Vec<NoiseLevel>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

pub fn parse_model_list(s: &str) -> Result<Vec<ModelKind>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

//! Subcommand implementations. Each one writes its artifacts under `output_dir` and embeds
//! the resolved configuration in every file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{ArrayView1, Axis};
use noro_core::binning::fit_binning;
use noro_core::dataset::synthetic::{generate, SurrogateConfig};
use noro_core::dataset::{feature_index, split_folds, Dataset, SplitOptions};
use noro_core::encoder::{train_encoder, EncoderFile, TrainedEncoder};
use noro_core::evaluation::{run_pipeline, save_pca_csv, ExperimentReport, PreparedData};
use noro_core::selection::{feature_report, FeatureReport};
use noro_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    Dataset::load(&config.dataset_path)
}

pub fn prepare(config: &ExperimentConfig, dataset: &Dataset) -> Result<PreparedData> {
    let options = SplitOptions {
        subject_disjoint: config.subject_disjoint,
    };
    let folds = split_folds(dataset, config.base_seed, &options)?;
    PreparedData::new(dataset, folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

fn summarize(name: &str, column: ArrayView1<'_, f64>) -> ColumnSummary {
    let n = column.len() as f64;
    let mean = column.sum() / n;
    ColumnSummary {
        name: name.to_string(),
        min: column.iter().copied().fold(f64::INFINITY, f64::min),
        max: column.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        std: (column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub config: serde_json::Value,
    pub rows: usize,
    pub subjects: usize,
    pub pool_rows: usize,
    pub test_rows: usize,
    pub folds: usize,
    pub features: Vec<ColumnSummary>,
    pub motor_updrs: ColumnSummary,
    pub total_updrs: ColumnSummary,
}

pub fn cmd_ingest(config: &ExperimentConfig) -> Result<DatasetSummary> {
    let dataset = load_dataset(config)?;
    let data = prepare(config, &dataset)?;
    let summary = DatasetSummary {
        config: config.echo(),
        rows: dataset.rows(),
        subjects: dataset.distinct_subjects(),
        pool_rows: data.pool_rows.len(),
        test_rows: data.test_rows.len(),
        folds: data.folds.len(),
        features: dataset
            .feature_names
            .iter()
            .zip(dataset.features.axis_iter(Axis(1)))
            .map(|(name, column)| summarize(name, column))
            .collect(),
        motor_updrs: summarize("motor_UPDRS", dataset.motor.view()),
        total_updrs: summarize("total_UPDRS", dataset.total.view()),
    };
    write(&config.output_dir.join("dataset_summary.json"), &pretty(&summary)?)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceFile {
    pub config: serde_json::Value,
    pub report: FeatureReport,
}

pub fn cmd_select_features(config: &ExperimentConfig) -> Result<FeatureReport> {
    let dataset = load_dataset(config)?;
    select_and_save(config, &dataset)
}

fn select_and_save(config: &ExperimentConfig, dataset: &Dataset) -> Result<FeatureReport> {
    let report = feature_report(dataset, config.selection.trials, &config.selection.forest, config.base_seed)?;
    let file = ImportanceFile {
        config: config.echo(),
        report: report.clone(),
    };
    write(&config.importance_path(), &pretty(&file)?)?;
    Ok(report)
}

/// The binning feature: named in the config, taken from a stored importance report produced
/// under the same dataset and selection settings, or computed (and stored) now.
pub fn resolve_binning_feature(config: &ExperimentConfig, dataset: &Dataset) -> Result<usize> {
    if let Some(name) = &config.binning_feature {
        return feature_index(name)
            .or_else(|| dataset.feature_names.iter().position(|n| n == name))
            .ok_or_else(|| Error::Config(format!("unknown binning feature `{name}`")));
    }
    let path = config.importance_path();
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(stored) = serde_json::from_str::<ImportanceFile>(&text) {
            let now = config.echo();
            let same = ["dataset_path", "selection", "base_seed"]
                .iter()
                .all(|key| stored.config.get(key) == now.get(key));
            if same {
                return Ok(stored.report.selected_index);
            }
        }
    }
    Ok(select_and_save(config, dataset)?.selected_index)
}

pub fn training_log_csv(trained: &TrainedEncoder, config_echo: &serde_json::Value) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "# config={}", serde_json::to_string(config_echo)?).ok();
    out.push_str("epoch,train_loss,valid_loss,fold\n");
    for e in &trained.log {
        writeln!(out, "{},{},{},{}", e.epoch, e.train_loss, e.valid_loss, e.fold).ok();
    }
    Ok(out)
}

pub fn cmd_train_encoder(config: &ExperimentConfig) -> Result<TrainedEncoder> {
    let dataset = load_dataset(config)?;
    let feature = resolve_binning_feature(config, &dataset)?;
    let data = prepare(config, &dataset)?;
    let pool = data.x.select(Axis(0), &data.pool_rows);
    let binning = fit_binning(feature, pool.column(feature), config.bins)?;
    let trained = train_encoder(data.x.view(), &data.folds, &binning, &config.train_config())?;
    let echo = config.echo();
    fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::Config(format!("{}: {e}", config.output_dir.display())))?;
    EncoderFile::from_trained(&trained, Some(echo.clone())).save(config.encoder_path())?;
    write(&config.output_dir.join("training_log.csv"), &training_log_csv(&trained, &echo)?)?;
    Ok(trained)
}

pub fn cmd_evaluate(config: &ExperimentConfig, train_first: bool) -> Result<ExperimentReport> {
    if train_first {
        cmd_train_encoder(config)?;
    }
    let path = config.encoder_path();
    if !path.exists() {
        return Err(Error::Config(format!(
            "{}: encoder not found; run `noro train-encoder` first or pass --train-first",
            path.display()
        )));
    }
    let file = EncoderFile::load(&path)?;
    if file.k != config.bins {
        return Err(Error::Config(format!(
            "{} was trained with {} bins but the config asks for {}; retrain or pass --train-first",
            path.display(),
            file.k,
            config.bins
        )));
    }
    let dataset = load_dataset(config)?;
    let data = prepare(config, &dataset)?;
    let encoder = file.weights()?;
    let output = run_pipeline(&data, &encoder, &file.binning(), &config.pipeline_config())?;
    let mut report = output.report;
    report.config_echo = config.echo();
    report.save_json(config.report_path())?;
    report.save_csv(config.output_dir.join("report.csv"))?;
    if config.pca {
        save_pca_csv(config.output_dir.join("pca.csv"), &output.pca, &report.config_echo)?;
    }
    Ok(report)
}

/// Re-renders the flat CSV from a stored JSON report. Returns the path written.
pub fn cmd_report(input: &Path, output: Option<&Path>) -> Result<PathBuf> {
    let report = ExperimentReport::load(input)?;
    let target = output.map(Path::to_path_buf).unwrap_or_else(|| input.with_extension("csv"));
    write(&target, &report.to_csv()?)?;
    Ok(target)
}

/// Writes a seeded surrogate dataset in the canonical column layout.
pub fn cmd_synth(path: &Path, surrogate: &SurrogateConfig) -> Result<()> {
    let dataset = generate(surrogate)?;
    let mut buf = Vec::new();
    dataset.write_csv(&mut buf)?;
    write(path, &String::from_utf8(buf).map_err(|e| Error::Csv(e.to_string()))?)
}

//! The evaluation run: noise, augmentation, baseline vs augmented regressors, aggregation.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cluster::{cluster_quality, pca_2d};
use super::metrics::{error_triple, ErrorTriple, Metric};
use super::report::{CellReport, ClusterReport, ExperimentReport, FeatureSpace, PcaPoint, RelativeReport, Variant};
use super::stats::{aggregate_trials, relative_error, significance_flag, SignificanceTest};
use crate::binning::BinningModel;
use crate::dataset::{zscore_fit, Dataset, FoldSplit, NormalizationStats, Target};
use crate::encoder::EncoderWeights;
use crate::error::{invalid, shape_err, Error, Result};
use crate::noise::{feature_power, NoiseLevel, NoiseSpec, PowerScope};
use crate::regressors::{fit_targets, Hyperparameters, ModelKind, RegressorSpec};
use crate::seed::{derive, stream, trial_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub targets: Vec<Target>,
    pub models: Vec<ModelKind>,
    pub hyper: Hyperparameters,
    pub snr_levels: Vec<NoiseLevel>,
    pub trials: usize,
    pub base_seed: u64,
    /// Use only the first `folds` rotations; `None` runs all of them.
    pub folds: Option<usize>,
    pub power_scope: PowerScope,
    pub significance: SignificanceTest,
    pub significance_level: f64,
    /// Report errors in UPDRS points instead of z-scored label units.
    pub denormalize: bool,
    pub cluster_quality: bool,
    pub pca: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            targets: Target::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
            hyper: Hyperparameters::default(),
            snr_levels: vec![NoiseLevel::Snr(10.0), NoiseLevel::Snr(20.0), NoiseLevel::Snr(30.0)],
            trials: 10,
            base_seed: 2024,
            folds: None,
            power_scope: PowerScope::Corrupted,
            significance: SignificanceTest::Welch,
            significance_level: 0.05,
            denormalize: false,
            cluster_quality: true,
            pca: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.models.is_empty() || self.targets.is_empty() || self.snr_levels.is_empty() {
            return Err(invalid("models, targets and SNR levels must be non-empty"));
        }
        if self.folds == Some(0) {
            return Err(invalid("folds must be at least 1"));
        }
        if !(self.significance_level > 0.0 && self.significance_level < 1.0) {
            return Err(invalid("significance level must lie in (0, 1)"));
        }
        for level in &self.snr_levels {
            if let NoiseLevel::Snr(v) = level {
                if !v.is_finite() {
                    return Err(invalid("SNR values must be finite"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PreparedTarget {
    pub target: Target,
    /// z-scored with pool statistics, all rows.
    pub labels: Array1<f64>,
    pub stats: NormalizationStats,
}

/// Features and labels z-scored with statistics from the train+validation pool.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub x: Array2<f64>,
    pub feature_stats: NormalizationStats,
    pub targets: Vec<PreparedTarget>,
    pub folds: Vec<FoldSplit>,
    pub pool_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

impl PreparedData {
    pub fn new(dataset: &Dataset, folds: Vec<FoldSplit>) -> Result<Self> {
        let first = folds.first().ok_or_else(|| invalid("no folds"))?;
        let pool_rows = first.pool_rows();
        let test_rows = first.test_rows.clone();
        let pool_x = dataset.features.select(Axis(0), &pool_rows);
        let mut targets = Vec::new();
        let mut feature_stats = None;
        for target in Target::ALL {
            let labels = dataset.labels(target);
            let pool_y = labels.select(Axis(0), &pool_rows);
            let stats = zscore_fit(pool_x.view(), pool_y.view())?;
            targets.push(PreparedTarget {
                target,
                labels: stats.apply_labels(labels),
                stats: stats.clone(),
            });
            feature_stats.get_or_insert(stats);
        }
        let feature_stats = feature_stats.expect("two targets");
        Ok(PreparedData {
            x: feature_stats.apply(dataset.features.view())?,
            feature_stats,
            targets,
            folds,
            pool_rows,
            test_rows,
        })
    }

    pub fn target(&self, target: Target) -> &PreparedTarget {
        self.targets.iter().find(|t| t.target == target).expect("all targets prepared")
    }
}

/// Noisy copy of every row: pool rows and test rows each get their own draw.
fn corrupt(data: &PreparedData, level: NoiseLevel, scope: PowerScope, tseed: u64) -> Result<Array2<f64>> {
    let snr = match level {
        NoiseLevel::None => return Ok(data.x.clone()),
        NoiseLevel::Snr(v) => v,
    };
    let pool = data.x.select(Axis(0), &data.pool_rows);
    let test = data.x.select(Axis(0), &data.test_rows);
    let pool_spec = NoiseSpec::for_matrix(pool.view(), snr, derive(tseed, &[stream::NOISE_POOL]))?;
    let test_powers = match scope {
        PowerScope::Corrupted => feature_power(test.view())?,
        PowerScope::TrainSplit => pool_spec.feature_powers.clone(),
    };
    let test_spec = NoiseSpec::new(test_powers, snr, derive(tseed, &[stream::NOISE_TEST]))?;
    let mut out = data.x.clone();
    for (rows, noisy) in [(&data.pool_rows, pool_spec.apply(pool.view())?), (&data.test_rows, test_spec.apply(test.view())?)] {
        for (&r, row) in rows.iter().zip(noisy.outer_iter()) {
            out.row_mut(r).assign(&row);
        }
    }
    Ok(out)
}

type CellKey = (Target, ModelKind, Variant);

struct UnitOutput {
    cells: BTreeMap<CellKey, ErrorTriple>,
}

fn run_unit(
    data: &PreparedData,
    encoder: &EncoderWeights,
    config: &PipelineConfig,
    trial: usize,
    level: NoiseLevel,
) -> Result<UnitOutput> {
    let tseed = trial_seed(config.base_seed, trial);
    let noisy = corrupt(data, level, config.power_scope, tseed)?;
    let augmented = encoder.augment(noisy.view())?;
    let test_x = noisy.select(Axis(0), &data.test_rows);
    let test_aug = augmented.select(Axis(0), &data.test_rows);
    let n_folds = config.folds.unwrap_or(data.folds.len()).min(data.folds.len());

    let mut per_fold: BTreeMap<CellKey, Vec<ErrorTriple>> = BTreeMap::new();
    for fold in &data.folds[..n_folds] {
        let train = &fold.train_rows;
        let ys: Vec<Array1<f64>> = config
            .targets
            .iter()
            .map(|&t| data.target(t).labels.select(Axis(0), train))
            .collect();
        let y_views: Vec<_> = ys.iter().map(|y| y.view()).collect();
        for (mi, &kind) in config.models.iter().enumerate() {
            let spec = RegressorSpec {
                kind,
                hyper: config.hyper.clone(),
                seed: derive(tseed, &[stream::MODEL, fold.fold_index as u64, mi as u64]),
            };
            for (variant, full, test) in [
                (Variant::Baseline, &noisy, &test_x),
                (Variant::Noro, &augmented, &test_aug),
            ] {
                let context = || format!("trial {trial}, snr {level}, fold {}, model {kind}, {}", fold.fold_index, variant.as_str());
                let train_x = full.select(Axis(0), train);
                let models = fit_targets(&spec, train_x.view(), &y_views).map_err(|e| e.context(context()))?;
                for (model, &target) in models.iter().zip(&config.targets) {
                    let prepared = data.target(target);
                    let pred = model.predict(test.view()).map_err(|e| e.context(context()))?;
                    let truth = prepared.labels.select(Axis(0), &data.test_rows);
                    let triple = if config.denormalize {
                        error_triple(
                            prepared.stats.invert_labels(truth.view()).view(),
                            prepared.stats.invert_labels(pred.view()).view(),
                        )?
                    } else {
                        error_triple(truth.view(), pred.view())?
                    };
                    if triple.mae > triple.rmse * (1.0 + 1e-12) {
                        return Err(Error::NonFinite(format!("{}: MAE exceeds RMSE", context())));
                    }
                    per_fold.entry((target, kind, variant)).or_default().push(triple);
                }
            }
        }
    }
    let cells = per_fold
        .into_iter()
        .map(|(k, v)| Ok((k, ErrorTriple::mean(&v)?)))
        .collect::<Result<_>>()?;
    Ok(UnitOutput { cells })
}

/// Test-set bins from the clean binning feature.
fn test_bins(data: &PreparedData, binning: &BinningModel) -> Result<Vec<usize>> {
    if binning.feature_index >= data.x.ncols() {
        return Err(shape_err(format!("binning feature {} out of range", binning.feature_index)));
    }
    let column = data.x.column(binning.feature_index).select(Axis(0), &data.test_rows);
    Ok(binning.assign(column.view()).bins)
}

fn space_matrices(data: &PreparedData, encoder: &EncoderWeights, x: &Array2<f64>) -> Result<[(FeatureSpace, Array2<f64>); 2]> {
    let test = x.select(Axis(0), &data.test_rows);
    let aug = encoder.augment(test.view())?;
    Ok([(FeatureSpace::Original, test), (FeatureSpace::Augmented, aug)])
}

/// Cluster quality of the test features in both spaces, clean and at each noisy level
/// (first trial's noise draw).
fn feature_space_study(
    data: &PreparedData,
    encoder: &EncoderWeights,
    binning: &BinningModel,
    config: &PipelineConfig,
) -> Result<(Vec<ClusterReport>, Vec<PcaPoint>)> {
    let bins = test_bins(data, binning)?;
    let tseed = trial_seed(config.base_seed, 0);
    let mut levels = vec![NoiseLevel::None];
    levels.extend(config.snr_levels.iter().copied().filter(|l| *l != NoiseLevel::None));

    let clean = space_matrices(data, encoder, &data.x)?;
    let projections = if config.pca {
        Some(
            clean
                .iter()
                .map(|(_, m)| pca_2d(m.view()))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };

    let mut reports = Vec::new();
    let mut points = Vec::new();
    for level in levels {
        let spaces = if level == NoiseLevel::None {
            clean.clone()
        } else {
            space_matrices(data, encoder, &corrupt(data, level, config.power_scope, tseed)?)?
        };
        for (si, (space, m)) in spaces.iter().enumerate() {
            if config.cluster_quality {
                let q = cluster_quality(m.view(), &bins)
                    .map_err(|e| e.context(format!("cluster quality, {} space, snr {level}", space.as_str())))?;
                reports.push(ClusterReport {
                    space: *space,
                    noisy: level != NoiseLevel::None,
                    snr: level,
                    silhouette: q.silhouette,
                    ch: q.calinski_harabasz,
                });
            }
            if let Some(projections) = &projections {
                let pca = &projections[si];
                let scores = (m - &pca.mean).dot(&pca.components.t());
                for (i, row) in scores.outer_iter().enumerate() {
                    points.push(PcaPoint {
                        space: *space,
                        snr: level,
                        row: data.test_rows[i],
                        bin: bins[i],
                        pc1: row[0],
                        pc2: row[1],
                    });
                }
            }
        }
    }
    reports.sort_by_key(|r| (r.space, r.noisy));
    Ok((reports, points))
}

pub struct PipelineOutput {
    pub report: ExperimentReport,
    pub pca: Vec<PcaPoint>,
}

/// Runs every trial × SNR unit (in parallel), averages over folds, then aggregates over
/// trials in a fixed order so the report does not depend on scheduling.
pub fn run_pipeline(
    data: &PreparedData,
    encoder: &EncoderWeights,
    binning: &BinningModel,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    if encoder.d() != data.x.ncols() {
        return Err(shape_err(format!(
            "encoder expects {} features, data has {}",
            encoder.d(),
            data.x.ncols()
        )));
    }
    let units: Vec<(usize, NoiseLevel)> = (0..config.trials)
        .flat_map(|t| config.snr_levels.iter().map(move |&l| (t, l)))
        .collect();
    let outputs = units
        .par_iter()
        .map(|&(trial, level)| run_unit(data, encoder, config, trial, level))
        .collect::<Vec<Result<UnitOutput>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut per_cell = Vec::new();
    let mut relative = Vec::new();
    for &target in &config.targets {
        for &model in &config.models {
            for (li, &level) in config.snr_levels.iter().enumerate() {
                let series = |variant: Variant| -> Vec<ErrorTriple> {
                    (0..config.trials)
                        .map(|t| outputs[t * config.snr_levels.len() + li].cells[&(target, model, variant)])
                        .collect()
                };
                let mut summaries = Vec::new();
                for variant in Variant::ALL {
                    let values = series(variant);
                    let summary = aggregate_trials(&values)?;
                    per_cell.push(CellReport {
                        target,
                        model,
                        snr: level,
                        variant,
                        rmse: summary.rmse,
                        mae: summary.mae,
                        median_ae: summary.median_ae,
                        trials: summary.trials,
                        trial_values: values,
                    });
                    summaries.push(summary);
                }
                let (base, noro) = (&summaries[0], &summaries[1]);
                for metric in Metric::ALL {
                    let context = || format!("{target}, {model}, snr {level}, {metric}");
                    let est = relative_error(base.get(metric), noro.get(metric)).map_err(|e| e.context(context()))?;
                    let sig = if config.trials >= 2 {
                        Some(
                            significance_flag(
                                &base.samples(metric),
                                &noro.samples(metric),
                                config.significance_level,
                                config.significance,
                            )
                            .map_err(|e| e.context(context()))?,
                        )
                    } else {
                        None
                    };
                    relative.push(RelativeReport {
                        target,
                        model,
                        snr: level,
                        metric,
                        delta_hat: est.delta_hat,
                        sigma_hat: est.sigma_hat,
                        significant: sig.is_some_and(|s| s.significant),
                        p: sig.map(|s| s.p),
                        test: config.significance,
                    });
                }
            }
        }
    }

    let (cluster_quality, pca) = if config.cluster_quality || config.pca {
        feature_space_study(data, encoder, binning, config)?
    } else {
        (Vec::new(), Vec::new())
    };

    Ok(PipelineOutput {
        report: ExperimentReport {
            config_echo: serde_json::to_value(config)?,
            per_cell,
            relative,
            cluster_quality,
        },
        pca,
    })
}

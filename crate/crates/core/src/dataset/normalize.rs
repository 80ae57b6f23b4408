use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Result};

/// Columns whose population std falls below this are treated as constant.
pub const DEGENERATE_STD: f64 = 1e-12;

/// Column means and population standard deviations used for z-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub feature_means: Vec<f64>,
    /// Always strictly positive; constant columns carry 1.0 and are flagged in `degenerate`.
    pub feature_stds: Vec<f64>,
    pub degenerate: Vec<bool>,
    pub label_mean: f64,
    pub label_std: f64,
    pub label_degenerate: bool,
}

fn mean_std(values: ArrayView1<'_, f64>) -> (f64, f64, bool) {
    let n = values.len() as f64;
    let mean = values.sum() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < DEGENERATE_STD {
        (mean, 1.0, true)
    } else {
        (mean, std, false)
    }
}

/// Fits per-column statistics (population convention, divide by M).
pub fn zscore_fit(
    matrix: ArrayView2<'_, f64>,
    labels: ArrayView1<'_, f64>,
) -> Result<NormalizationStats> {
    let m = matrix.nrows();
    if m < 2 {
        return Err(invalid(format!("z-score fit needs at least 2 rows, got {m}")));
    }
    if labels.len() != m {
        return Err(shape_err(format!(
            "{} labels for {m} feature rows",
            labels.len()
        )));
    }
    let mut feature_means = Vec::with_capacity(matrix.ncols());
    let mut feature_stds = Vec::with_capacity(matrix.ncols());
    let mut degenerate = Vec::with_capacity(matrix.ncols());
    for column in matrix.axis_iter(Axis(1)) {
        let (mean, std, flag) = mean_std(column);
        feature_means.push(mean);
        feature_stds.push(std);
        degenerate.push(flag);
    }
    let (label_mean, label_std, label_degenerate) = mean_std(labels);
    Ok(NormalizationStats {
        feature_means,
        feature_stds,
        degenerate,
        label_mean,
        label_std,
        label_degenerate,
    })
}

/// Applies `stats` to a feature matrix.
pub fn zscore_apply(matrix: ArrayView2<'_, f64>, stats: &NormalizationStats) -> Result<Array2<f64>> {
    stats.apply(matrix)
}

impl NormalizationStats {
    /// Statistics that leave `dims` columns and the labels unchanged.
    pub fn identity(dims: usize) -> Self {
        NormalizationStats {
            feature_means: vec![0.0; dims],
            feature_stds: vec![1.0; dims],
            degenerate: vec![false; dims],
            label_mean: 0.0,
            label_std: 1.0,
            label_degenerate: false,
        }
    }

    pub fn dims(&self) -> usize {
        self.feature_means.len()
    }

    fn check(&self, cols: usize) -> Result<()> {
        if cols != self.dims() {
            return Err(shape_err(format!(
                "matrix has {cols} columns, normalization stats have {}",
                self.dims()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, matrix: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(matrix.ncols())?;
        let mut out = matrix.to_owned();
        for (j, mut column) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (mean, std) = (self.feature_means[j], self.feature_stds[j]);
            column.mapv_inplace(|v| (v - mean) / std);
        }
        Ok(out)
    }

    pub fn invert(&self, matrix: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(matrix.ncols())?;
        let mut out = matrix.to_owned();
        for (j, mut column) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (mean, std) = (self.feature_means[j], self.feature_stds[j]);
            column.mapv_inplace(|v| v * std + mean);
        }
        Ok(out)
    }

    pub fn apply_labels(&self, labels: ArrayView1<'_, f64>) -> Array1<f64> {
        labels.mapv(|v| (v - self.label_mean) / self.label_std)
    }

    pub fn invert_labels(&self, labels: ArrayView1<'_, f64>) -> Array1<f64> {
        labels.mapv(|v| v * self.label_std + self.label_mean)
    }
}

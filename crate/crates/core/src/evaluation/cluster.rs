//! Label-aware cluster quality and a 2-D PCA projection for plotting.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eigh, UPLO};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterQuality {
    pub silhouette: f64,
    pub calinski_harabasz: f64,
}

/// Maps arbitrary labels to `0..g` in ascending label order.
fn dense_labels(points: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(Vec<usize>, usize)> {
    if points.nrows() != labels.len() {
        return Err(shape_err(format!("{} points but {} labels", points.nrows(), labels.len())));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cluster metric input".into()));
    }
    let mut ids = BTreeMap::new();
    for &l in labels {
        ids.entry(l).or_insert(0usize);
    }
    if ids.len() < 2 {
        return Err(invalid(format!("cluster metrics need at least 2 distinct labels, got {}", ids.len())));
    }
    for (i, v) in ids.values_mut().enumerate() {
        *v = i;
    }
    let g = ids.len();
    Ok((labels.iter().map(|l| ids[l]).collect(), g))
}

/// Mean silhouette over all points (Euclidean). Points alone in their cluster score 0.
pub fn silhouette(points: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
    let (dense, g) = dense_labels(points, labels)?;
    let mut sizes = vec![0usize; g];
    for &c in &dense {
        sizes[c] += 1;
    }
    let n = dense.len();
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = dense[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let pi = points.row(i);
            let mut sums = vec![0.0; g];
            for (j, pj) in points.outer_iter().enumerate() {
                if j != i {
                    let d2: f64 = pi.iter().zip(pj.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                    sums[dense[j]] += d2.sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..g)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / n as f64)
}

/// Between-group over within-group dispersion, each divided by its degrees of freedom.
/// Returns 1.0 when the within-group dispersion is zero.
pub fn calinski_harabasz(points: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
    let (dense, g) = dense_labels(points, labels)?;
    let n = dense.len();
    let d = points.ncols();
    let overall = points.mean_axis(Axis(0)).ok_or_else(|| invalid("no points"))?;
    let mut centers = Array2::<f64>::zeros((g, d));
    let mut sizes = vec![0usize; g];
    for (row, &c) in points.outer_iter().zip(&dense) {
        let mut center = centers.row_mut(c);
        center += &row;
        sizes[c] += 1;
    }
    for (mut center, &size) in centers.outer_iter_mut().zip(&sizes) {
        center /= size as f64;
    }
    let between: f64 = centers
        .outer_iter()
        .zip(&sizes)
        .map(|(c, &size)| size as f64 * (&c - &overall).mapv(|v| v * v).sum())
        .sum();
    let within: f64 = points
        .outer_iter()
        .zip(&dense)
        .map(|(row, &c)| (&row - &centers.row(c)).mapv(|v| v * v).sum())
        .sum();
    if within == 0.0 {
        return Ok(1.0);
    }
    Ok(between * (n - g) as f64 / (within * (g - 1) as f64))
}

pub fn cluster_quality(points: ArrayView2<'_, f64>, labels: &[usize]) -> Result<ClusterQuality> {
    Ok(ClusterQuality {
        silhouette: silhouette(points, labels)?,
        calinski_harabasz: calinski_harabasz(points, labels)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// 2×D, rows ordered by decreasing explained variance.
    pub components: Array2<f64>,
    pub explained_variance: [f64; 2],
    pub mean: Array1<f64>,
    /// N×2 scores.
    pub scores: Array2<f64>,
}

/// Projects onto the two leading principal axes. Each axis is signed so that its
/// largest-magnitude loading is positive.
pub fn pca_2d(points: ArrayView2<'_, f64>) -> Result<PcaProjection> {
    let (n, d) = points.dim();
    if n < 2 || d < 2 {
        return Err(invalid(format!("PCA needs at least 2 rows and 2 columns, got {n}x{d}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PCA input".into()));
    }
    let mean = points.mean_axis(Axis(0)).ok_or_else(|| invalid("no points"))?;
    let centered = &points - &mean;
    let cov = centered.t().dot(&centered) / (n - 1) as f64;
    let (values, vectors) = cov
        .eigh(UPLO::Lower)
        .map_err(|e| Error::NonFinite(format!("PCA eigendecomposition: {e}")))?;
    let mut components = Array2::<f64>::zeros((2, d));
    let mut explained = [0.0; 2];
    for k in 0..2 {
        let idx = d - 1 - k;
        let mut axis = vectors.column(idx).to_owned();
        let pivot = axis.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            axis.mapv_inplace(|v| -v);
        }
        components.row_mut(k).assign(&axis);
        explained[k] = values[idx].max(0.0);
    }
    let scores = centered.dot(&components.t());
    Ok(PcaProjection {
        components,
        explained_variance: explained,
        mean,
        scores,
    })
}

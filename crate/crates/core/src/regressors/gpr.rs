use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use ndarray_linalg::cholesky::{CholeskyFactorized, FactorizeCInto, SolveC};
use ndarray_linalg::UPLO;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Error, Result};

/// Zero-mean GP regression with a fixed RBF kernel (no hyperparameter fitting).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GprParams {
    pub length_scale: f64,
    pub signal_variance: f64,
    /// Added to the kernel diagonal before factorization.
    pub jitter: f64,
}

impl Default for GprParams {
    fn default() -> Self {
        GprParams {
            length_scale: 1.0,
            signal_variance: 1.0,
            jitter: 1e-6,
        }
    }
}

impl GprParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_scale > 0.0) || !(self.signal_variance > 0.0) || !(self.jitter > 0.0) {
            return Err(invalid("gpr length_scale, signal_variance and jitter must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GprModel {
    pub params: GprParams,
    pub x_train: Arc<Array2<f64>>,
    /// `(K + jitter·I)⁻¹ y`.
    pub weights: Array1<f64>,
}

fn squared_norms(x: ArrayView2<'_, f64>) -> Array1<f64> {
    x.map_axis(Axis(1), |row| row.dot(&row))
}

/// `σ²·exp(−‖a−b‖²/(2ℓ²))` for every pair of rows.
pub fn rbf_kernel(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, params: &GprParams) -> Array2<f64> {
    let na = squared_norms(a);
    let nb = squared_norms(b);
    let mut k = a.dot(&b.t());
    let scale = -0.5 / (params.length_scale * params.length_scale);
    for ((i, j), v) in k.indexed_iter_mut() {
        let d2 = (na[i] + nb[j] - 2.0 * *v).max(0.0);
        *v = params.signal_variance * (d2 * scale).exp();
    }
    k
}

/// Fits one model per target column, sharing the kernel factorization.
pub fn fit_targets(params: &GprParams, x: ArrayView2<'_, f64>, ys: &[ArrayView1<'_, f64>]) -> Result<Vec<GprModel>> {
    params.validate()?;
    if let Some(y) = ys.iter().find(|y| y.len() != x.nrows()) {
        return Err(shape_err(format!("{} rows but {} targets", x.nrows(), y.len())));
    }
    let mut k = rbf_kernel(x, x, params);
    for i in 0..k.nrows() {
        k[[i, i]] += params.jitter;
    }
    let factor: CholeskyFactorized<_> = k.factorizec_into(UPLO::Lower).map_err(|e| {
        Error::Cholesky(format!(
            "{e}; kernel matrix not positive definite, try a larger jitter than {}",
            params.jitter
        ))
    })?;
    let x_train = Arc::new(x.to_owned());
    ys.iter()
        .map(|y| {
            let weights = factor
                .solvec(y)
                .map_err(|e| Error::Cholesky(format!("{e}; try a larger jitter than {}", params.jitter)))?;
            if weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::Cholesky(format!(
                    "non-finite solution; try a larger jitter than {}",
                    params.jitter
                )));
            }
            Ok(GprModel {
                params: params.clone(),
                x_train: Arc::clone(&x_train),
                weights,
            })
        })
        .collect()
}

pub fn fit(params: &GprParams, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<GprModel> {
    Ok(fit_targets(params, x, &[y])?.remove(0))
}

impl GprModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        rbf_kernel(x, self.x_train.view(), &self.params).dot(&self.weights)
    }
}

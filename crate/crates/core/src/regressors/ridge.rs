use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use ndarray_linalg::{Cholesky, UPLO};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RidgeParams {
    pub lambda: f64,
}

impl Default for RidgeParams {
    fn default() -> Self {
        RidgeParams { lambda: 1.0 }
    }
}

impl RidgeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(invalid(format!("ridge lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub coefficients: Array1<f64>,
    pub intercept: f64,
}

/// Squared relative pivot size below which the normal equations count as singular.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Least squares with an L2 penalty on the coefficients (not the intercept), solved on centered data.
pub fn fit(params: &RidgeParams, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<RidgeModel> {
    params.validate()?;
    let x_mean = x.mean_axis(Axis(0)).ok_or_else(|| invalid("ridge needs at least one row"))?;
    let y_mean = y.mean().unwrap_or(0.0);
    let xc = &x - &x_mean;
    let yc = y.mapv(|v| v - y_mean);
    let mut gram: Array2<f64> = xc.t().dot(&xc);
    for i in 0..gram.nrows() {
        gram[[i, i]] += params.lambda;
    }
    let rhs = xc.t().dot(&yc);
    let singular = || {
        Error::Singular(format!(
            "X'X + {}I is not positive definite; use a ridge penalty lambda > 0",
            params.lambda
        ))
    };
    let lower = gram.cholesky(UPLO::Lower).map_err(|_| singular())?;
    let diag = lower.diag();
    let max = diag.fold(0.0f64, |m, &v| m.max(v.abs()));
    let min = diag.fold(f64::INFINITY, |m, &v| m.min(v.abs()));
    if !(max > 0.0) || min * min <= PIVOT_TOLERANCE * max * max {
        return Err(singular());
    }
    // Forward then backward substitution with the Cholesky factor.
    let n = lower.nrows();
    let mut z = Array1::<f64>::zeros(n);
    for i in 0..n {
        let s: f64 = (0..i).map(|j| lower[[i, j]] * z[j]).sum();
        z[i] = (rhs[i] - s) / lower[[i, i]];
    }
    let mut beta = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| lower[[j, i]] * beta[j]).sum();
        beta[i] = (z[i] - s) / lower[[i, i]];
    }
    let intercept = y_mean - x_mean.dot(&beta);
    Ok(RidgeModel {
        coefficients: beta,
        intercept,
    })
}

impl RidgeModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        x.dot(&self.coefficients) + self.intercept
    }
}

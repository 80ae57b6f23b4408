use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTriple {
    pub rmse: f64,
    pub mae: f64,
    pub median_ae: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rmse,
    Mae,
    MedianAe,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Rmse, Metric::Mae, Metric::MedianAe];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::Mae => "mae",
            Metric::MedianAe => "median_ae",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmse" => Ok(Metric::Rmse),
            "mae" => Ok(Metric::Mae),
            "median_ae" | "medae" => Ok(Metric::MedianAe),
            other => Err(invalid(format!("unknown metric `{other}`"))),
        }
    }
}

impl ErrorTriple {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Rmse => self.rmse,
            Metric::Mae => self.mae,
            Metric::MedianAe => self.median_ae,
        }
    }

    /// Component-wise mean.
    pub fn mean(triples: &[ErrorTriple]) -> Result<ErrorTriple> {
        if triples.is_empty() {
            return Err(invalid("mean of no error triples"));
        }
        let n = triples.len() as f64;
        Ok(ErrorTriple {
            rmse: triples.iter().map(|t| t.rmse).sum::<f64>() / n,
            mae: triples.iter().map(|t| t.mae).sum::<f64>() / n,
            median_ae: triples.iter().map(|t| t.median_ae).sum::<f64>() / n,
        })
    }
}

/// Median with the mean-of-middle-two convention for even lengths. Sorts `values`.
pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn error_triple(y: ArrayView1<'_, f64>, y_hat: ArrayView1<'_, f64>) -> Result<ErrorTriple> {
    if y.len() != y_hat.len() {
        return Err(shape_err(format!("{} targets but {} predictions", y.len(), y_hat.len())));
    }
    if y.is_empty() {
        return Err(invalid("error metrics need at least one prediction"));
    }
    let mut abs: Vec<f64> = y.iter().zip(y_hat.iter()).map(|(a, b)| (a - b).abs()).collect();
    let n = abs.len() as f64;
    let mse = abs.iter().map(|e| e * e).sum::<f64>() / n;
    let mae = abs.iter().sum::<f64>() / n;
    Ok(ErrorTriple {
        rmse: mse.sqrt(),
        mae,
        median_ae: median(&mut abs),
    })
}

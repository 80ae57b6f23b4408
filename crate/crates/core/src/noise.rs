//! Additive Gaussian noise calibrated to a per-feature signal-to-noise ratio.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Error, Result};

/// A noise condition: either clean data or a target SNR in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "LevelRepr")]
pub enum NoiseLevel {
    None,
    Snr(f64),
}

impl NoiseLevel {
    pub fn snr_db(self) -> Option<f64> {
        match self {
            NoiseLevel::None => None,
            NoiseLevel::Snr(v) => Some(v),
        }
    }
}

impl fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseLevel::None => f.write_str("none"),
            NoiseLevel::Snr(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for NoiseLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") || s.eq_ignore_ascii_case("inf") {
            return Ok(NoiseLevel::None);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(NoiseLevel::Snr(v)),
            _ => Err(invalid(format!("invalid SNR `{s}` (expected dB value or `none`)"))),
        }
    }
}

impl From<NoiseLevel> for String {
    fn from(level: NoiseLevel) -> String {
        level.to_string()
    }
}

/// Config files may write an SNR as a bare number.
#[derive(Deserialize)]
#[serde(untagged)]
enum LevelRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<LevelRepr> for NoiseLevel {
    type Error = Error;

    fn try_from(repr: LevelRepr) -> Result<Self> {
        match repr {
            LevelRepr::Number(v) if v.is_finite() => Ok(NoiseLevel::Snr(v)),
            LevelRepr::Number(v) => Err(invalid(format!("invalid SNR {v}"))),
            LevelRepr::Text(s) => s.parse(),
        }
    }
}

/// Which rows the signal power is measured on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerScope {
    /// The matrix that receives the noise.
    #[default]
    Corrupted,
    /// The training pool only, reused for the test rows.
    TrainSplit,
}

impl FromStr for PowerScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrupted" => Ok(PowerScope::Corrupted),
            "train_split" => Ok(PowerScope::TrainSplit),
            other => Err(invalid(format!("unknown power scope `{other}` (valid: corrupted, train_split)"))),
        }
    }
}

/// Mean of squares per column.
pub fn feature_power(x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(invalid("feature power of an empty matrix"));
    }
    let m = x.nrows() as f64;
    Ok(x.axis_iter(Axis(1))
        .map(|column| column.iter().map(|v| v * v).sum::<f64>() / m)
        .collect())
}

/// `σ_j² = P_j · 10^(−SNR/10)`.
pub fn noise_variances(powers: &[f64], snr_db: f64) -> Vec<f64> {
    let factor = 10f64.powf(-snr_db / 10.0);
    powers.iter().map(|p| p * factor).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub feature_powers: Vec<f64>,
    pub variances: Vec<f64>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(feature_powers: Vec<f64>, snr_db: f64, seed: u64) -> Result<Self> {
        if let Some(p) = feature_powers.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(invalid(format!("feature power must be finite and non-negative, got {p}")));
        }
        if !snr_db.is_finite() {
            return Err(invalid("SNR must be finite; use NoiseLevel::None for clean data"));
        }
        Ok(NoiseSpec {
            variances: noise_variances(&feature_powers, snr_db),
            feature_powers,
            snr_db,
            seed,
        })
    }

    /// Spec whose powers are measured on `x` itself.
    pub fn for_matrix(x: ArrayView2<'_, f64>, snr_db: f64, seed: u64) -> Result<Self> {
        Self::new(feature_power(x)?, snr_db, seed)
    }

    /// The M×D noise matrix. Draws are taken in row-major order from ChaCha8 seeded with `seed`.
    pub fn sample(&self, rows: usize) -> Array2<f64> {
        let sigmas: Vec<f64> = self.variances.iter().map(|v| v.sqrt()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let d = sigmas.len();
        let mut noise = Array2::zeros((rows, d));
        for mut row in noise.rows_mut() {
            for (cell, sigma) in row.iter_mut().zip(&sigmas) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *cell = sigma * z;
            }
        }
        noise
    }

    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.variances.len() {
            return Err(shape_err(format!(
                "noise spec has {} features, matrix has {}",
                self.variances.len(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("noise injection input".into()));
        }
        let noise = self.sample(x.nrows());
        let mut out = x.to_owned();
        for (j, mut column) in out.axis_iter_mut(Axis(1)).enumerate() {
            if self.variances[j] > 0.0 {
                column += &noise.column(j);
            }
        }
        Ok(out)
    }
}

/// Adds noise at `level`, with powers measured on `x`. Clean data passes through unchanged.
pub fn inject(x: ArrayView2<'_, f64>, level: NoiseLevel, seed: u64) -> Result<Array2<f64>> {
    match level {
        NoiseLevel::None => Ok(x.to_owned()),
        NoiseLevel::Snr(snr) => NoiseSpec::for_matrix(x, snr, seed)?.apply(x),
    }
}

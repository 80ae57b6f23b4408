use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::metrics::{ErrorTriple, Metric};
use crate::error::{invalid, shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

impl MetricSummary {
    /// Mean and sample standard deviation (T−1 denominator; zero for a single value).
    pub fn of(values: &[f64]) -> Result<MetricSummary> {
        if values.is_empty() {
            return Err(invalid("summary of no values"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Ok(MetricSummary { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub rmse: MetricSummary,
    pub mae: MetricSummary,
    pub median_ae: MetricSummary,
    pub trials: usize,
    /// Per-trial values, kept for significance testing.
    pub values: Vec<ErrorTriple>,
}

impl TrialSummary {
    pub fn get(&self, metric: Metric) -> MetricSummary {
        match metric {
            Metric::Rmse => self.rmse,
            Metric::Mae => self.mae,
            Metric::MedianAe => self.median_ae,
        }
    }

    pub fn samples(&self, metric: Metric) -> Vec<f64> {
        self.values.iter().map(|t| t.get(metric)).collect()
    }
}

pub fn aggregate_trials(trials: &[ErrorTriple]) -> Result<TrialSummary> {
    if trials.is_empty() {
        return Err(invalid("cannot aggregate zero trials"));
    }
    let column = |metric: Metric| -> Vec<f64> { trials.iter().map(|t| t.get(metric)).collect() };
    Ok(TrialSummary {
        rmse: MetricSummary::of(&column(Metric::Rmse))?,
        mae: MetricSummary::of(&column(Metric::Mae))?,
        median_ae: MetricSummary::of(&column(Metric::MedianAe))?,
        trials: trials.len(),
        values: trials.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeErrorEstimate {
    pub delta_hat: f64,
    pub sigma_hat: f64,
}

/// First-order propagation of the trial spread into the ratio `E_x′ / E_x`.
pub fn relative_error(x: MetricSummary, x_prime: MetricSummary) -> Result<RelativeErrorEstimate> {
    if !(x.mean > 0.0) || !(x_prime.mean > 0.0) {
        return Err(invalid(format!(
            "relative error needs positive mean errors, got {} and {}",
            x.mean, x_prime.mean
        )));
    }
    let ratio = x_prime.mean / x.mean;
    let cv_x = x.std / x.mean;
    let cv_xp = x_prime.std / x_prime.mean;
    Ok(RelativeErrorEstimate {
        delta_hat: (x_prime.mean - x.mean) / x.mean,
        sigma_hat: ratio * (cv_x * cv_x + cv_xp * cv_xp).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignificanceTest {
    #[default]
    Welch,
    /// Paired t over per-trial differences; trials share their noise draw.
    Paired,
}

impl SignificanceTest {
    pub fn as_str(self) -> &'static str {
        match self {
            SignificanceTest::Welch => "welch",
            SignificanceTest::Paired => "paired",
        }
    }
}

impl fmt::Display for SignificanceTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignificanceTest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "welch" => Ok(SignificanceTest::Welch),
            "paired" => Ok(SignificanceTest::Paired),
            other => Err(invalid(format!("unknown significance test `{other}` (valid: welch, paired)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub significant: bool,
    pub p: f64,
    pub t: f64,
    pub df: f64,
}

fn sample_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sided p-value of `diff / se` under Student t with `df` degrees of freedom.
/// A zero standard error gives p = 1 for a zero difference and p = 0 otherwise.
fn two_sided(diff: f64, se: f64, df: f64) -> Result<(f64, f64)> {
    if se == 0.0 || !df.is_finite() {
        let p = if diff == 0.0 { 1.0 } else { 0.0 };
        let t = if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY };
        return Ok((t, p));
    }
    let t = diff / se;
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| invalid(format!("t distribution: {e}")))?;
    Ok((t, (2.0 * dist.sf(t.abs())).min(1.0)))
}

pub fn significance_flag(x: &[f64], x_prime: &[f64], level: f64, test: SignificanceTest) -> Result<Significance> {
    if x.len() < 2 || x_prime.len() < 2 {
        return Err(invalid(format!(
            "significance test needs at least 2 trials per sample, got {} and {}",
            x.len(),
            x_prime.len()
        )));
    }
    if x.len() != x_prime.len() {
        return Err(shape_err(format!("{} vs {} trials", x.len(), x_prime.len())));
    }
    if x.iter().chain(x_prime).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("significance test input".into()));
    }
    let n = x.len() as f64;
    let (t, p, df) = match test {
        SignificanceTest::Welch => {
            let (ma, va) = sample_var(x);
            let (mb, vb) = sample_var(x_prime);
            let (qa, qb) = (va / n, vb / n);
            let se2 = qa + qb;
            let df = if se2 == 0.0 {
                f64::INFINITY
            } else {
                se2 * se2 / (qa * qa / (n - 1.0) + qb * qb / (n - 1.0))
            };
            let (t, p) = two_sided(mb - ma, se2.sqrt(), df)?;
            (t, p, df)
        }
        SignificanceTest::Paired => {
            let diffs: Vec<f64> = x.iter().zip(x_prime).map(|(a, b)| b - a).collect();
            let (md, vd) = sample_var(&diffs);
            let df = n - 1.0;
            let (t, p) = two_sided(md, (vd / n).sqrt(), df)?;
            (t, p, df)
        }
    };
    Ok(Significance {
        significant: p < level,
        p,
        t,
        df,
    })
}

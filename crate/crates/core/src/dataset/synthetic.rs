//! Seeded surrogate of the telemonitoring table.
//!
//! Produces data in the exact source schema so the full pipeline can run when
//! the real recordings are not at hand. The generator is a latent-subject
//! model: each simulated patient has a baseline severity, a progression slope,
//! a pitch period and vocal-quality factors; recordings scatter around those
//! subject-level values. Marginal scales follow the published ranges of the
//! source data (jitter ~1e-3, jitter(abs) ~1e-5, HNR ~20 dB, UPDRS 5-55).
//! Relationships between features and UPDRS are weak, as in the real data.
//! It is a stand-in for exercising the code, not a replica of the recordings.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{Dataset, Metadata, FEATURE_NAMES};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateConfig {
    pub subjects: usize,
    pub rows: usize,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            subjects: 42,
            rows: super::CANONICAL_ROWS,
            seed: 2024,
        }
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn rows_per_subject(config: &SurrogateConfig, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let base = config.rows / config.subjects;
    let spread = (base / 5).max(1) as i64;
    let mut counts: Vec<i64> = (0..config.subjects)
        .map(|_| (base as i64 + rng.random_range(-spread..=spread)).max(1))
        .collect();
    let mut diff = config.rows as i64 - counts.iter().sum::<i64>();
    let mut i = 0;
    while diff != 0 {
        let idx = i % config.subjects;
        if diff > 0 {
            counts[idx] += 1;
            diff -= 1;
        } else if counts[idx] > 1 {
            counts[idx] -= 1;
            diff += 1;
        }
        i += 1;
    }
    counts.into_iter().map(|c| c as usize).collect()
}

pub fn generate(config: &SurrogateConfig) -> Result<Dataset> {
    if config.subjects == 0 || config.rows < config.subjects {
        return Err(invalid(format!(
            "surrogate needs rows >= subjects > 0 (got {} rows, {} subjects)",
            config.rows, config.subjects
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let counts = rows_per_subject(config, &mut rng);
    let d = FEATURE_NAMES.len();

    let mut features = Vec::with_capacity(config.rows * d);
    let mut motor = Vec::with_capacity(config.rows);
    let mut total = Vec::with_capacity(config.rows);
    let mut subject_ids = Vec::with_capacity(config.rows);
    let mut metadata = Metadata::default();

    let baseline = Normal::new(21.0, 7.5).expect("valid normal");
    for (s, &count) in counts.iter().enumerate() {
        let age = rng.random_range(36.0f64..86.0).floor();
        let sex = if rng.random_bool(0.32) { 1.0 } else { 0.0 };
        let motor0 = Distribution::<f64>::sample(&baseline, &mut rng).clamp(6.0, 38.0);
        let total0 = (1.25 * motor0 + 2.5 + 3.0 * gauss(&mut rng)).max(motor0 + 1.0);
        let slope = 0.015 + 0.02 * gauss(&mut rng);
        let severity = 0.35 * (motor0 - 21.0) / 7.5 + 0.94 * gauss(&mut rng);

        // Subject-level vocal characteristics.
        let period = if sex > 0.5 { 1.0 / 190.0 } else { 1.0 / 125.0 } * (0.12 * gauss(&mut rng)).exp();
        let jitter_s = 0.35 * severity + 0.6 * gauss(&mut rng);
        let shimmer_s = 0.3 * severity + 0.3 * jitter_s + 0.6 * gauss(&mut rng);
        let rpde_s = 0.25 * severity + 0.8 * gauss(&mut rng);
        let dfa_s = 0.25 * severity + 0.9 * gauss(&mut rng);
        let ppe_s = 0.3 * severity + 0.3 * jitter_s + 0.7 * gauss(&mut rng);
        let hnr_s = 0.8 * gauss(&mut rng);

        let mut times: Vec<f64> = (0..count).map(|_| rng.random_range(-4.0..215.0)).collect();
        times.sort_by(f64::total_cmp);

        for &t in &times {
            subject_ids.push(s as u32 + 1);
            metadata.age.push(age);
            metadata.sex.push(sex);
            metadata.test_time.push((t * 1e3).round() / 1e3);
            motor.push(motor0 + slope * t + 0.8 * gauss(&mut rng));
            total.push(total0 + 1.3 * slope * t + 1.0 * gauss(&mut rng));

            let j = jitter_s + 0.7 * gauss(&mut rng);
            let sh = shimmer_s + 0.6 * gauss(&mut rng);
            let jitter_pct = (0.005f64.ln() + 0.5 * j).exp();
            let jitter_abs = jitter_pct / 100.0 * period * (0.1 * gauss(&mut rng)).exp();
            let rap = jitter_pct / 100.0 * 0.5 * (0.1 * gauss(&mut rng)).exp();
            let ppq5 = jitter_pct / 100.0 * 0.53 * (0.1 * gauss(&mut rng)).exp();
            let shimmer = (0.03f64.ln() + 0.45 * sh).exp();
            let shimmer_db = 8.7 * shimmer * (0.05 * gauss(&mut rng)).exp();
            let apq3 = shimmer * 0.5 * (0.08 * gauss(&mut rng)).exp();
            let apq5 = shimmer * 0.58 * (0.08 * gauss(&mut rng)).exp();
            let apq11 = shimmer * 0.8 * (0.1 * gauss(&mut rng)).exp();
            let nhr = (0.02f64.ln() + 0.6 * j + 0.4 * sh + 0.4 * gauss(&mut rng)).exp();
            let hnr = 22.0 - 2.5 * sh + 1.5 * hnr_s + 1.5 * gauss(&mut rng);
            let rpde = (0.54 + 0.06 * rpde_s + 0.05 * gauss(&mut rng)).clamp(0.15, 0.98);
            let dfa = (0.65 + 0.06 * dfa_s + 0.025 * gauss(&mut rng)).clamp(0.5, 0.87);
            let ppe = (0.2 + 0.06 * ppe_s + 0.04 * gauss(&mut rng)).clamp(0.02, 0.75);

            features.extend_from_slice(&[
                jitter_pct,
                jitter_abs,
                rap,
                ppq5,
                3.0 * rap,
                shimmer,
                shimmer_db,
                apq3,
                apq5,
                apq11,
                3.0 * apq3,
                nhr,
                hnr,
                rpde,
                dfa,
                ppe,
            ]);
        }
    }

    let m = motor.len();
    Ok(Dataset {
        features: Array2::from_shape_vec((m, d), features).expect("row-major buffer"),
        motor: Array1::from(motor),
        total: Array1::from(total),
        subject_ids,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_shape_and_determinism() {
        let config = SurrogateConfig::default();
        let a = generate(&config).unwrap();
        assert_eq!(a.rows(), 5875);
        assert_eq!(a.dims(), 16);
        assert_eq!(a.distinct_subjects(), 42);
        assert!(a.features.iter().all(|v| v.is_finite()));
        assert_eq!(a, generate(&config).unwrap());
    }

    #[test]
    fn csv_round_trip_keeps_rows() {
        let ds = generate(&SurrogateConfig {
            subjects: 5,
            rows: 60,
            seed: 9,
        })
        .unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = super::super::parse_csv(&buf).unwrap();
        assert_eq!(back.rows(), 60);
        assert_eq!(back, ds);
    }
}

//! Ingestion of the Parkinson's telemonitoring table, z-score normalization
//! and the pool/test fold layout shared by every experiment.

mod normalize;
mod split;
pub mod synthetic;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use normalize::{zscore_apply, zscore_fit, NormalizationStats};
pub use split::{pool_size, split_by_subject, split_folds, split_rows, FoldSplit, SplitOptions, CANONICAL_ROWS, FOLDS};

/// Header of the source CSV, in file order.
pub const CSV_HEADER: [&str; 22] = [
    "subject#",
    "age",
    "sex",
    "test_time",
    "motor_UPDRS",
    "total_UPDRS",
    "Jitter(%)",
    "Jitter(Abs)",
    "Jitter:RAP",
    "Jitter:PPQ5",
    "Jitter:DDP",
    "Shimmer",
    "Shimmer(dB)",
    "Shimmer:APQ3",
    "Shimmer:APQ5",
    "Shimmer:APQ11",
    "Shimmer:DDA",
    "NHR",
    "HNR",
    "RPDE",
    "DFA",
    "PPE",
];

/// The sixteen speech features, in matrix column order.
pub const FEATURE_NAMES: [&str; 16] = [
    "Jitter(%)",
    "Jitter(Abs)",
    "Jitter:RAP",
    "Jitter:PPQ5",
    "Jitter:DDP",
    "Shimmer",
    "Shimmer(dB)",
    "Shimmer:APQ3",
    "Shimmer:APQ5",
    "Shimmer:APQ11",
    "Shimmer:DDA",
    "NHR",
    "HNR",
    "RPDE",
    "DFA",
    "PPE",
];

const FEATURE_OFFSET: usize = 6;

/// Position of a feature by name.
pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

/// Which UPDRS score is being predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Motor,
    Total,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Motor, Target::Total];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Motor => "motor",
            Target::Total => "total",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "motor" | "motor_updrs" => Ok(Target::Motor),
            "total" | "total_updrs" => Ok(Target::Total),
            other => Err(Error::InvalidArgument(format!(
                "unknown target `{other}` (expected motor or total)"
            ))),
        }
    }
}

/// Per-recording metadata that is carried along but never used as a feature.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    pub age: Vec<f64>,
    pub sex: Vec<f64>,
    pub test_time: Vec<f64>,
}

/// The telemonitoring table: speech features, both UPDRS labels and subject ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub motor: Array1<f64>,
    pub total: Array1<f64>,
    pub subject_ids: Vec<u32>,
    pub feature_names: Vec<String>,
    pub metadata: Metadata,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn dims(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self, target: Target) -> ArrayView1<'_, f64> {
        match target {
            Target::Motor => self.motor.view(),
            Target::Total => self.total.view(),
        }
    }

    pub fn distinct_subjects(&self) -> usize {
        let mut ids = self.subject_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        parse_csv(&bytes).map_err(|e| e.context(path.display().to_string()))
    }

    /// Writes the table back out in the source CSV layout.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer
            .write_record(CSV_HEADER)
            .map_err(|e| Error::Csv(e.to_string()))?;
        let mut record: Vec<String> = Vec::with_capacity(CSV_HEADER.len());
        for i in 0..self.rows() {
            record.clear();
            record.push(self.subject_ids[i].to_string());
            for meta in [&self.metadata.age, &self.metadata.sex, &self.metadata.test_time] {
                record.push(meta.get(i).copied().unwrap_or(0.0).to_string());
            }
            record.push(self.motor[i].to_string());
            record.push(self.total[i].to_string());
            record.extend(self.features.row(i).iter().map(|v| v.to_string()));
            writer
                .write_record(&record)
                .map_err(|e| Error::Csv(e.to_string()))?;
        }
        writer.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    let trimmed = raw.trim();
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::BadCell {
            row,
            column: column.to_string(),
            value: trimmed.to_string(),
        }),
    }
}

/// Parses the telemonitoring CSV. Rows are reported 1-based, counting data rows only.
pub fn parse_csv(raw: &[u8]) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(raw);

    let header = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .clone();
    if header.len() == 0 || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Csv("empty file".into()));
    }
    for (position, expected) in CSV_HEADER.iter().enumerate() {
        match header.get(position) {
            None => {
                return Err(Error::MissingColumn {
                    column: expected.to_string(),
                    expected: CSV_HEADER.join(","),
                })
            }
            Some(found) if found != *expected => {
                if !header.iter().any(|h| h == *expected) {
                    return Err(Error::MissingColumn {
                        column: expected.to_string(),
                        expected: CSV_HEADER.join(","),
                    });
                }
                return Err(Error::UnexpectedColumn {
                    position,
                    found: found.to_string(),
                    expected: expected.to_string(),
                });
            }
            Some(_) => {}
        }
    }
    if header.len() > CSV_HEADER.len() {
        return Err(Error::UnexpectedColumn {
            position: CSV_HEADER.len(),
            found: header[CSV_HEADER.len()].to_string(),
            expected: "end of header".into(),
        });
    }

    let mut features = Vec::new();
    let mut motor = Vec::new();
    let mut total = Vec::new();
    let mut subjects = Vec::new();
    let mut metadata = Metadata::default();

    for (index, record) in reader.records().enumerate() {
        let row = index + 1;
        let record = record.map_err(|e| Error::Csv(format!("row {row}: {e}")))?;
        if record.len() != CSV_HEADER.len() {
            return Err(Error::Csv(format!(
                "row {row}: expected {} fields, found {}",
                CSV_HEADER.len(),
                record.len()
            )));
        }
        let subject = parse_cell(&record[0], row, CSV_HEADER[0])?;
        if subject < 0.0 || subject.fract() != 0.0 || subject > u32::MAX as f64 {
            return Err(Error::BadCell {
                row,
                column: CSV_HEADER[0].to_string(),
                value: record[0].to_string(),
            });
        }
        subjects.push(subject as u32);
        metadata.age.push(parse_cell(&record[1], row, CSV_HEADER[1])?);
        metadata.sex.push(parse_cell(&record[2], row, CSV_HEADER[2])?);
        metadata
            .test_time
            .push(parse_cell(&record[3], row, CSV_HEADER[3])?);
        motor.push(parse_cell(&record[4], row, CSV_HEADER[4])?);
        total.push(parse_cell(&record[5], row, CSV_HEADER[5])?);
        for (j, name) in FEATURE_NAMES.iter().enumerate() {
            features.push(parse_cell(&record[FEATURE_OFFSET + j], row, name)?);
        }
    }

    if motor.is_empty() {
        return Err(Error::NoDataRows);
    }
    let m = motor.len();
    let features = Array2::from_shape_vec((m, FEATURE_NAMES.len()), features)
        .map_err(|e| Error::Shape(e.to_string()))?;

    Ok(Dataset {
        features,
        motor: Array1::from(motor),
        total: Array1::from(total),
        subject_ids: subjects,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        metadata,
    })
}

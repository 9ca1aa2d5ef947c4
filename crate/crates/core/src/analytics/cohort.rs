//! Cohort records and their CSV form.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytics::reports::{csv_error, DensityCategory};
use crate::error::{Error, Result};

pub const COHORT_HEADER: [&str; 5] = ["subject_id", "dataset", "age", "density", "mammo_category"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DatasetTag {
    #[serde(rename = "ISPY2")]
    Ispy2,
    #[serde(rename = "DBC-MRI")]
    DbcMri,
    #[serde(rename = "internal")]
    Internal,
    #[serde(rename = "synthetic")]
    Synthetic,
}

impl DatasetTag {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetTag::Ispy2 => "ISPY2",
            DatasetTag::DbcMri => "DBC-MRI",
            DatasetTag::Internal => "internal",
            DatasetTag::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ispy2" | "i-spy2" => Ok(DatasetTag::Ispy2),
            "dbc-mri" | "dbc_mri" | "dbcmri" => Ok(DatasetTag::DbcMri),
            "internal" => Ok(DatasetTag::Internal),
            "synthetic" => Ok(DatasetTag::Synthetic),
            other => Err(Error::InvalidParameter(format!("unknown dataset tag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortRecord {
    pub subject_id: String,
    pub dataset: DatasetTag,
    pub age: f64,
    pub density: f64,
    pub mammo_category: Option<DensityCategory>,
}

impl CohortRecord {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::OutOfRange(self.density));
        }
        if !(self.age >= 0.0 && self.age.is_finite()) {
            return Err(Error::InvalidParameter(format!("age {} must be >= 0", self.age)));
        }
        Ok(())
    }
}

/// Reads a cohort CSV; the header must match [`COHORT_HEADER`] exactly.
pub fn read_cohort_csv(path: &Path) -> Result<Vec<CohortRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, &e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, &e))?.clone();
    if headers.iter().collect::<Vec<_>>() != COHORT_HEADER {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("expected header {}", COHORT_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, &e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let fail = |reason: String| Error::Csv {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let num = |i: usize, name: &str| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .map_err(|_| fail(format!("{name} {:?} is not a number", &row[i])))
        };
        let record = CohortRecord {
            subject_id: row[0].to_owned(),
            dataset: row[1].parse().map_err(|e: Error| fail(e.to_string()))?,
            age: num(2, "age")?,
            density: num(3, "density")?,
            mammo_category: match &row[4] {
                "" => None,
                s => Some(s.parse().map_err(|e: Error| fail(e.to_string()))?),
            },
        };
        record.validate().map_err(|e| fail(e.to_string()))?;
        out.push(record);
    }
    if out.is_empty() {
        return Err(Error::EmptyCohort);
    }
    Ok(out)
}

pub fn write_cohort_csv<W: Write>(records: &[CohortRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::InvalidParameter(format!("CSV write failed: {e}"));
    w.write_record(COHORT_HEADER).map_err(wrap)?;
    for r in records {
        w.write_record([
            r.subject_id.clone(),
            r.dataset.to_string(),
            r.age.to_string(),
            r.density.to_string(),
            r.mammo_category.map(|c| c.to_string()).unwrap_or_default(),
        ])
        .map_err(wrap)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidParameter(format!("CSV write failed: {e}")))
}

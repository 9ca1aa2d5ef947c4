//! Batch manifest: one subject per CSV row.
//!
//! Columns: `subject_id,input,kind,age,report,dataset`. `kind` is `dicom_dir`
//! or `portable`; `report` and `dataset` may be empty. Relative paths resolve
//! against the manifest's directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analytics::reports::csv_error;
use crate::analytics::DatasetTag;
use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 6] = ["subject_id", "input", "kind", "age", "report", "dataset"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    DicomDir,
    Portable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub input: PathBuf,
    pub kind: InputKind,
    pub age: f64,
    pub report: Option<PathBuf>,
    pub dataset: DatasetTag,
}

#[derive(Deserialize)]
struct Row {
    subject_id: String,
    input: PathBuf,
    kind: InputKind,
    age: f64,
    report: Option<PathBuf>,
    dataset: Option<String>,
}

/// Reads and checks a manifest: ids must be unique and every path must exist.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, &e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, &e))?.clone();
    if headers.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("expected header {}", MANIFEST_HEADER.join(",")),
        });
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, &e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let fail = |reason: String| Error::Csv {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let row: Row = record
            .deserialize(Some(&headers))
            .map_err(|e| fail(e.to_string()))?;
        if row.subject_id.is_empty() {
            return Err(fail("empty subject_id".into()));
        }
        if !seen.insert(row.subject_id.clone()) {
            return Err(fail(format!("duplicate subject_id {:?}", row.subject_id)));
        }
        let input = base.join(&row.input);
        if !input.exists() {
            return Err(fail(format!("input {} does not exist", input.display())));
        }
        let report = row.report.map(|r| base.join(r));
        if let Some(r) = &report {
            if !r.is_file() {
                return Err(fail(format!("report {} does not exist", r.display())));
            }
        }
        let dataset = match row.dataset.as_deref() {
            None | Some("") => DatasetTag::Internal,
            Some(s) => s.parse().map_err(|e: Error| fail(e.to_string()))?,
        };
        if !(row.age >= 0.0 && row.age.is_finite()) {
            return Err(fail(format!("age {} must be >= 0", row.age)));
        }
        out.push(ManifestEntry {
            subject_id: row.subject_id,
            input,
            kind: row.kind,
            age: row.age,
            report,
            dataset,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyCohort);
    }
    Ok(out)
}

//! Mammography-report density categories and keyword rules.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Four-level mammographic density scale, ordered from fatty to extremely dense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DensityCategory {
    #[serde(rename = "fatty")]
    AlmostEntirelyFatty,
    #[serde(rename = "scattered")]
    ScatteredFibroglandular,
    #[serde(rename = "heterogeneously_dense")]
    HeterogeneouslyDense,
    #[serde(rename = "extremely_dense")]
    ExtremelyDense,
}

impl DensityCategory {
    pub const ALL: [DensityCategory; 4] = [
        DensityCategory::AlmostEntirelyFatty,
        DensityCategory::ScatteredFibroglandular,
        DensityCategory::HeterogeneouslyDense,
        DensityCategory::ExtremelyDense,
    ];

    /// 1 (fatty) through 4 (extremely dense).
    pub fn rank(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_rank(rank: u8) -> Option<Self> {
        Self::ALL.get((rank as usize).checked_sub(1)?).copied()
    }

    /// CSV token.
    pub fn as_str(self) -> &'static str {
        match self {
            DensityCategory::AlmostEntirelyFatty => "fatty",
            DensityCategory::ScatteredFibroglandular => "scattered",
            DensityCategory::HeterogeneouslyDense => "heterogeneously_dense",
            DensityCategory::ExtremelyDense => "extremely_dense",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DensityCategory::AlmostEntirelyFatty => "Almost entirely fatty",
            DensityCategory::ScatteredFibroglandular => "Scattered areas of fibroglandular density",
            DensityCategory::HeterogeneouslyDense => "Heterogeneously dense",
            DensityCategory::ExtremelyDense => "Extremely dense",
        }
    }
}

impl fmt::Display for DensityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DensityCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        DensityCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == t)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown density category {s:?}")))
    }
}

/// Keyword families, densest first; the first family with a hit wins.
const KEYWORDS: [(DensityCategory, &[&str]); 4] = [
    (
        DensityCategory::ExtremelyDense,
        &["extremely dense", "extremely fibroglandular"],
    ),
    (
        DensityCategory::HeterogeneouslyDense,
        &["heterogeneously dense", "heterogeneously fibroglandular"],
    ),
    (
        DensityCategory::ScatteredFibroglandular,
        &["scattered fibroglandular"],
    ),
    (
        DensityCategory::AlmostEntirelyFatty,
        &["entirely fatty", "predominantly fatty"],
    ),
];

/// Case-insensitive, whitespace-normalized keyword match.
///
/// Negated phrases ("not extremely dense") still match.
pub fn parse_density_category(report_text: &str) -> Result<DensityCategory> {
    let normalized = report_text
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    if normalized.is_empty() {
        return Err(Error::UnknownCategory);
    }
    KEYWORDS
        .iter()
        .find(|(_, words)| words.iter().any(|w| normalized.contains(w)))
        .map(|(c, _)| *c)
        .ok_or(Error::UnknownCategory)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub subject_id: String,
    pub text: String,
}

/// Reads a report corpus: a directory of text files (subject id = file stem)
/// or a CSV with `subject_id,report_text` columns.
pub fn read_corpus(path: &Path) -> Result<Vec<Report>> {
    if path.is_dir() {
        let mut files = Vec::new();
        for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
            let p = entry.map_err(|e| Error::io(path, e))?.path();
            if p.is_file() && !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')) {
                files.push(p);
            }
        }
        files.sort();
        files
            .into_iter()
            .map(|p| {
                let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                let subject_id = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                Ok(Report { subject_id, text })
            })
            .collect()
    } else {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, &e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, &e))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["subject_id", "report_text"] {
            return Err(Error::Csv {
                path: path.to_path_buf(),
                line: 1,
                reason: "expected header subject_id,report_text".into(),
            });
        }
        reader
            .records()
            .map(|r| {
                let r = r.map_err(|e| csv_error(path, &e))?;
                Ok(Report {
                    subject_id: r[0].to_owned(),
                    text: r[1].to_owned(),
                })
            })
            .collect()
    }
}

pub(crate) fn csv_error(path: &Path, e: &csv::Error) -> Error {
    if let csv::ErrorKind::Io(io) = e.kind() {
        return Error::io(path, std::io::Error::new(io.kind(), io.to_string()));
    }
    Error::Csv {
        path: path.to_path_buf(),
        line: e.position().map(|p| p.line()).unwrap_or(0),
        reason: e.to_string(),
    }
}

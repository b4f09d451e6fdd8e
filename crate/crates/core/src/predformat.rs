//! Prediction files exchanged with external models.
//!
//! ```text
//! {"format_version":1,"producer_id":"bert","class_names":["hateful","offensive","neither"],"rows":2}
//! davidson:17,0.010000000,0.920000000,0.070000000
//! davidson:18,0.300000000,0.300000000,0.400000000
//! ```
//!
//! Line 1 is a JSON header. Every further line is an example id followed by
//! three probabilities in class order. Ids may contain commas (the last three
//! fields are the probabilities) but not line breaks. Lines end in LF.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::ProbabilityMatrix;
use crate::label::{ClassLabel, NUM_CLASSES};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PredFormatError {
    #[error("unsupported format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("class names {0:?} do not match hateful,offensive,neither")]
    ClassNames(Vec<String>),
    #[error("line {line}: probability {value} outside [0, 1]")]
    EntryRange { line: usize, value: f64 },
    #[error("line {line}: probabilities sum to {sum}")]
    RowSum { line: usize, sum: f64 },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("header declares {declared} rows, file has {found}")]
    CountMismatch { declared: usize, found: usize },
    #[error("id {0:?} contains a line break")]
    InvalidId(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub producer_id: String,
    pub class_names: Vec<String>,
    pub rows: usize,
}

/// A parsed prediction file: ids aligned with matrix rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub ids: Vec<String>,
    pub matrix: ProbabilityMatrix,
}

impl Predictions {
    pub fn producer(&self) -> &str {
        self.matrix.producer()
    }

    /// Rows reordered to follow `ids`; errors name the first id that is absent.
    pub fn aligned_to(&self, ids: &[String]) -> Result<ProbabilityMatrix, String> {
        let pos: std::collections::HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let idx = ids
            .iter()
            .map(|id| pos.get(id.as_str()).copied().ok_or_else(|| id.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.matrix.select(&idx))
    }
}

fn class_names() -> Vec<String> {
    ClassLabel::ALL.iter().map(|l| l.name().to_string()).collect()
}

pub fn format_predictions(ids: &[String], matrix: &ProbabilityMatrix) -> Result<String, PredFormatError> {
    if ids.len() != matrix.len() {
        return Err(PredFormatError::CountMismatch {
            declared: matrix.len(),
            found: ids.len(),
        });
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        producer_id: matrix.producer().to_string(),
        class_names: class_names(),
        rows: ids.len(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    let mut seen = HashSet::new();
    for (i, (id, row)) in ids.iter().zip(matrix.rows()).enumerate() {
        if id.contains(['\n', '\r']) {
            return Err(PredFormatError::InvalidId(id.clone()));
        }
        if !seen.insert(id.as_str()) {
            return Err(PredFormatError::DuplicateId { line: i + 2, id: id.clone() });
        }
        out.push_str(&format!("{id},{:.9},{:.9},{:.9}\n", row[0], row[1], row[2]));
    }
    Ok(out)
}

pub fn parse_predictions(text: &str) -> Result<Predictions, PredFormatError> {
    let mut lines = text.split('\n');
    let head = lines.next().unwrap_or("").trim_end_matches('\r');
    let header: Header = serde_json::from_str(head).map_err(|e| PredFormatError::Malformed {
        line: 1,
        message: format!("bad header: {e}"),
    })?;
    if header.format_version != FORMAT_VERSION {
        return Err(PredFormatError::Version {
            found: header.format_version,
        });
    }
    if header.class_names != class_names() {
        return Err(PredFormatError::ClassNames(header.class_names));
    }

    let mut ids = Vec::with_capacity(header.rows);
    let mut rows = Vec::with_capacity(header.rows);
    let mut seen = HashSet::new();
    for (i, raw) in lines.enumerate() {
        let line = i + 2;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let mut fields = raw.rsplitn(NUM_CLASSES + 1, ',');
        let mut row = [0.0; NUM_CLASSES];
        for c in (0..NUM_CLASSES).rev() {
            let f = fields.next().ok_or_else(|| PredFormatError::Malformed {
                line,
                message: "expected id and 3 probabilities".into(),
            })?;
            let v: f64 = f.trim().parse().map_err(|_| PredFormatError::Malformed {
                line,
                message: format!("not a number: {f:?}"),
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(PredFormatError::EntryRange { line, value: v });
            }
            row[c] = v;
        }
        let id = fields.next().ok_or_else(|| PredFormatError::Malformed {
            line,
            message: "missing id".into(),
        })?;
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ProbabilityMatrix::ROW_SUM_TOLERANCE {
            return Err(PredFormatError::RowSum { line, sum });
        }
        if !seen.insert(id.to_string()) {
            return Err(PredFormatError::DuplicateId { line, id: id.to_string() });
        }
        ids.push(id.to_string());
        rows.push(row);
    }
    if rows.len() != header.rows {
        return Err(PredFormatError::CountMismatch {
            declared: header.rows,
            found: rows.len(),
        });
    }
    let matrix = ProbabilityMatrix::new(header.producer_id, rows).map_err(|e| PredFormatError::Malformed {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(Predictions { ids, matrix })
}

pub fn write_predictions(path: &Path, ids: &[String], matrix: &ProbabilityMatrix) -> Result<(), PredFormatError> {
    let text = format_predictions(ids, matrix)?;
    std::fs::write(path, text).map_err(|source| PredFormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_predictions(path: &Path) -> Result<Predictions, PredFormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| PredFormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_predictions(&text)
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HarnessError, SweepRecord};

pub const CSV_COLUMNS: [&str; 11] = [
    "p",
    "N",
    "lhs",
    "constant",
    "abs_error",
    "normalized_error",
    "m1",
    "m2",
    "violations",
    "hypothesis",
    "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(HarnessError::InvalidSpec(format!(
                "unknown format {other:?}"
            ))),
        }
    }
}

pub fn to_csv(records: &[SweepRecord]) -> Result<String, HarnessError> {
    let parse = |e: csv::Error| HarnessError::Parse(e.to_string());
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(parse)?;
    for r in records {
        w.serialize(r).map_err(parse)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Parse(e.to_string()))
}

pub fn from_csv(text: &str) -> Result<Vec<SweepRecord>, HarnessError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r
        .headers()
        .map_err(|e| HarnessError::Parse(e.to_string()))?;
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(HarnessError::Parse(format!(
            "unexpected header {headers:?}"
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| HarnessError::Parse(e.to_string())))
        .collect()
}

pub fn to_json(records: &[SweepRecord]) -> String {
    serde_json::to_string_pretty(records).expect("records serialize")
}

pub fn from_json(text: &str) -> Result<Vec<SweepRecord>, HarnessError> {
    serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
}

/// Writes the records to `path`, replacing any existing file.
pub fn emit(
    records: &[SweepRecord],
    format: OutputFormat,
    path: &Path,
) -> Result<(), HarnessError> {
    let body = match format {
        OutputFormat::Csv => to_csv(records)?,
        OutputFormat::Json => to_json(records),
    };
    std::fs::write(path, body).map_err(|e| HarnessError::IoFailure {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

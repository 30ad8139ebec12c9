//! The trace file format emitted by every command: a schema-versioned
//! header with a parameter echo, then long-format rows
//! `(time, quantity, branch, value)`.
//!
//! CSV files open with `#`-prefixed header lines followed by an RFC-4180
//! table; JSON files are one object with the same header fields and an
//! array of row objects. Undefined values (entropy at a zero-probability
//! point) are emitted as an empty CSV field / JSON `null`, never as NaN
//! text. Readers reject any schema version they do not understand, and a
//! write -> read round trip reproduces every value exactly.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_NAME: &str = "omcrep-trace";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing `# {SCHEMA_NAME} v<N>` header line")]
    MissingHeader,
    #[error("unsupported schema version {got}, this reader understands v{SCHEMA_VERSION}")]
    VersionMismatch { got: u32 },
    #[error("malformed header line: {0}")]
    BadHeaderLine(String),
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },
}

type Result<T> = std::result::Result<T, TraceError>;

/// One output row. `branch` is 0 for stage-1 quantities, 1..=4 for the
/// stage-2 branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: f64,
    pub quantity: String,
    pub branch: u8,
    pub value: Option<f64>,
}

impl TraceRow {
    pub fn new(time: f64, quantity: impl Into<String>, branch: u8, value: Option<f64>) -> Self {
        Self {
            time,
            quantity: quantity.into(),
            branch,
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub schema: String,
    pub version: u32,
    /// Parameter echo; ordered map so emitted files are reproducible.
    pub params: BTreeMap<String, String>,
    pub rows: Vec<TraceRow>,
}

impl TraceFile {
    pub fn new(params: BTreeMap<String, String>) -> Self {
        Self {
            schema: SCHEMA_NAME.to_string(),
            version: SCHEMA_VERSION,
            params,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: TraceRow) {
        debug_assert!(
            row.value.is_none_or(f64::is_finite),
            "emitted values must be finite"
        );
        self.rows.push(row);
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "# {} v{}", self.schema, self.version)?;
        for (key, value) in &self.params {
            writeln!(out, "# {key} = {value}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "quantity", "branch", "value"])?;
        for row in &self.rows {
            w.write_record([
                row.time.to_string(),
                row.quantity.clone(),
                row.branch.to_string(),
                row.value.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, out: &mut dyn Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut *out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_csv(input: &mut dyn Read) -> Result<Self> {
        let mut reader = std::io::BufReader::new(input);
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let first = line.trim_end();
        let rest = first
            .strip_prefix(&format!("# {SCHEMA_NAME} v"))
            .ok_or(TraceError::MissingHeader)?;
        let version: u32 = rest
            .parse()
            .map_err(|_| TraceError::BadHeaderLine(first.to_string()))?;
        if version != SCHEMA_VERSION {
            return Err(TraceError::VersionMismatch { got: version });
        }

        let mut params = BTreeMap::new();
        let mut table = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            if let Some(stripped) = line.trim_end().strip_prefix("# ") {
                let (key, value) = stripped
                    .split_once(" = ")
                    .ok_or_else(|| TraceError::BadHeaderLine(stripped.to_string()))?;
                params.insert(key.to_string(), value.to_string());
            } else {
                table.push_str(&line);
                reader.read_to_string(&mut table)?;
                break;
            }
        }

        let mut csv_reader = csv::Reader::from_reader(table.as_bytes());
        let mut rows = Vec::new();
        for (i, record) in csv_reader.records().enumerate() {
            let record = record?;
            let get = |idx: usize| -> Result<&str> {
                record.get(idx).ok_or(TraceError::BadRow {
                    row: i,
                    message: "missing column".to_string(),
                })
            };
            let time: f64 = get(0)?.parse().map_err(|e| TraceError::BadRow {
                row: i,
                message: format!("time: {e}"),
            })?;
            let quantity = get(1)?.to_string();
            let branch: u8 = get(2)?.parse().map_err(|e| TraceError::BadRow {
                row: i,
                message: format!("branch: {e}"),
            })?;
            let value_text = get(3)?;
            let value = if value_text.is_empty() {
                None
            } else {
                let v: f64 = value_text.parse().map_err(|e| TraceError::BadRow {
                    row: i,
                    message: format!("value: {e}"),
                })?;
                if !v.is_finite() {
                    return Err(TraceError::NonFinite { row: i });
                }
                Some(v)
            };
            rows.push(TraceRow {
                time,
                quantity,
                branch,
                value,
            });
        }
        Ok(Self {
            schema: SCHEMA_NAME.to_string(),
            version,
            params,
            rows,
        })
    }

    pub fn read_json(input: &mut dyn Read) -> Result<Self> {
        let parsed: TraceFile = serde_json::from_reader(input)?;
        if parsed.version != SCHEMA_VERSION {
            return Err(TraceError::VersionMismatch {
                got: parsed.version,
            });
        }
        Ok(parsed)
    }

    pub fn write_to_path(&self, path: &Path, format: crate::config::OutputFormat) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        match format {
            crate::config::OutputFormat::Csv => self.write_csv(&mut file),
            crate::config::OutputFormat::Json => self.write_json(&mut file),
        }
    }
}

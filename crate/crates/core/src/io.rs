//! CSV ingestion and run manifests.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result, TimeSeries};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    None,
    /// `ln(column)`
    Log,
    /// `ln(numerator / denominator)`
    LogRatio {
        numerator: String,
        denominator: String,
    },
}

/// Parsed CSV table: header plus raw bytes (for the manifest digest).
#[derive(Debug, Clone)]
pub struct DataFile {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
    digest: String,
}

impl DataFile {
    pub fn open(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Data(format!("cannot read CSV header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(Error::Data("CSV header row is empty".into()));
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Data(format!("row {}: {e}", i + 2)))?;
            rows.push(record.iter().map(str::to_string).collect());
        }
        Ok(DataFile {
            headers,
            rows,
            digest: sha256_hex(bytes),
        })
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    /// Hex SHA-256 of the file bytes.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Data(format!(
                "column '{name}' not found; available columns: {}",
                self.headers.join(", ")
            ))
        })?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let line = i + 2;
                let cell = row.get(idx).map(String::as_str).unwrap_or("");
                if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
                    return Err(Error::Data(format!("missing value in column '{name}' at line {line}")));
                }
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Data(format!("non-numeric value '{cell}' in column '{name}' at line {line}"))
                })?;
                if !v.is_finite() {
                    return Err(Error::Data(format!(
                        "non-finite value in column '{name}' at line {line}"
                    )));
                }
                Ok(v)
            })
            .collect()
    }

    /// Extracts a series, applying `transform`. For `LogRatio` the column
    /// name is ignored.
    pub fn series(&self, column: &str, transform: &Transform) -> Result<TimeSeries> {
        let values = match transform {
            Transform::None => self.column(column)?,
            Transform::Log => log_positive(column, self.column(column)?)?,
            Transform::LogRatio { numerator, denominator } => {
                let num = log_positive(numerator, self.column(numerator)?)?;
                let den = log_positive(denominator, self.column(denominator)?)?;
                num.iter().zip(&den).map(|(a, b)| a - b).collect()
            }
        };
        TimeSeries::new(values)
    }
}

fn log_positive(name: &str, values: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(pos) = values.iter().position(|v| *v <= 0.0) {
        return Err(Error::Data(format!(
            "log transform needs positive values; column '{name}' has {} at line {}",
            values[pos],
            pos + 2
        )));
    }
    Ok(values.into_iter().map(f64::ln).collect())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything needed to rerun a command and get the same output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub library_version: String,
    pub input_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: impl Into<String>,
        config: serde_json::Value,
        seed: Option<u64>,
        input_digest: Option<String>,
    ) -> Self {
        RunManifest {
            command: command.into(),
            config,
            seed,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest,
            wall_seconds: None,
            outputs: Vec::new(),
        }
    }

    pub fn with_wall_seconds(mut self, secs: f64) -> Self {
        self.wall_seconds = Some(secs);
        self
    }

    pub fn with_outputs(mut self, outputs: Vec<String>) -> Self {
        self.outputs = outputs;
        self
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

//! Line-delimited JSON record files: one header line, then one row per line.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Row fields holding wall-clock measurements; they are skipped by
/// [`content_hash`] and [`strip_timestamps`].
pub const TIMESTAMP_FIELDS: &[&str] = &["wall_time"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema_version: u32,
    pub library_version: String,
    pub command: String,
    pub config: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &str, config: Vec<(String, String)>) -> Self {
        Header {
            schema_version: SCHEMA_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordFile<T> {
    pub header: Header,
    pub rows: Vec<T>,
}

impl<T: Serialize + DeserializeOwned> RecordFile<T> {
    pub fn new(header: Header, rows: Vec<T>) -> Self {
        RecordFile { header, rows }
    }

    pub fn to_text(&self) -> Result<String> {
        let mut out = encode(&self.header)?;
        out.push('\n');
        for row in &self.rows {
            out.push_str(&encode(row)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let bad = |line: usize, e: serde_json::Error| CliError::Format {
            path: origin.to_path_buf(),
            reason: format!("line {line}: {e}"),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| CliError::Format {
            path: origin.to_path_buf(),
            reason: "empty file".into(),
        })?;
        let header: Header = serde_json::from_str(first).map_err(|e| bad(1, e))?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(CliError::Format {
                path: origin.to_path_buf(),
                reason: format!("schema version {}", header.schema_version),
            });
        }
        let rows = lines
            .map(|(n, l)| serde_json::from_str(l).map_err(|e| bad(n + 1, e)))
            .collect::<Result<_>>()?;
        Ok(RecordFile { header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = self.to_text()?;
        let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        f.write_all(text.as_bytes())
            .map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut text = String::new();
        for line in BufReader::new(f).lines() {
            text.push_str(&line.map_err(|e| CliError::io(path, e))?);
            text.push('\n');
        }
        Self::parse(&text, path)
    }
}

fn encode<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| CliError::Numerical(format!("serialization: {e}")))
}

/// Removes timestamp fields from every JSON object line of a record file.
pub fn strip_timestamps(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        match serde_json::from_str::<serde_json::Value>(line) {
            Ok(serde_json::Value::Object(mut map)) => {
                for f in TIMESTAMP_FIELDS {
                    map.remove(*f);
                }
                out.push_str(&serde_json::Value::Object(map).to_string());
            }
            _ => out.push_str(line),
        }
        out.push('\n');
    }
    out
}

/// SHA-256 of the record-file text with timestamp fields removed.
pub fn content_hash(text: &str) -> String {
    let digest = Sha256::digest(strip_timestamps(text).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tensor_denoise_core::{ExperimentRecord, FormatKind};

    fn record(trial: u64, wall_time: f64) -> ExperimentRecord {
        ExperimentRecord {
            trial,
            format: FormatKind::Canonical,
            shape: vec![4, 4, 4],
            rank: 1,
            seed: 0x9e37_79b9_7f4a_7c15,
            noise_ratio: 0.1,
            solver: "als".into(),
            epsilon: 0.1 + 1.0 / 3.0,
            noise_norm: std::f64::consts::PI,
            residual: 1e-300,
            hypothesis_holds: true,
            guarantee_holds: false,
            knorm: Some(2.0f64.sqrt()),
            wall_time,
        }
    }

    #[test]
    fn rows_round_trip_exactly() {
        let file = RecordFile::new(
            Header::new("sweep-dim", vec![("seeds".into(), "2".into())]),
            vec![record(0, 0.5), record(1, 0.25)],
        );
        let text = file.to_text().unwrap();
        let back: RecordFile<ExperimentRecord> = RecordFile::parse(&text, Path::new("x")).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_text().unwrap(), text);
    }

    #[test]
    fn hash_ignores_wall_time_only() {
        let h = Header::new("sweep-dim", vec![]);
        let a = RecordFile::new(h.clone(), vec![record(0, 0.5)])
            .to_text()
            .unwrap();
        let b = RecordFile::new(h.clone(), vec![record(0, 9.0)])
            .to_text()
            .unwrap();
        let c = RecordFile::new(h, vec![record(1, 0.5)]).to_text().unwrap();
        assert_ne!(a, b);
        assert_eq!(content_hash(&a), content_hash(&b));
        assert_ne!(content_hash(&a), content_hash(&c));
        assert!(!strip_timestamps(&a).contains("wall_time"));
    }

    #[test]
    fn malformed_files_rejected() {
        let p = Path::new("bad.jsonl");
        assert!(RecordFile::<ExperimentRecord>::parse("", p).is_err());
        assert!(RecordFile::<ExperimentRecord>::parse("{\"schema_version\":1}\n", p).is_err());
        let h = encode(&Header::new("fit", vec![])).unwrap();
        let err = RecordFile::<ExperimentRecord>::parse(&format!("{h}\n{{\"trial\":1}}\n"), p)
            .unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}

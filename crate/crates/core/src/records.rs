//! JSONL record schemas shared across the pipeline, plus line-oriented IO.
//!
//! One trace per line:
//!
//! ```json
//! {"id": "p1", "problem": "...", "gold_answer": "4", "output": "<understanding>...",
//!  "model": "generator", "dataset": "math", "meta": {}}
//! ```
//!
//! Scoring adds a `rewards` object and an `advantage` (null when not
//! grouped), and keeps every input field.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::verify::GoldAnswer;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Schema(String),
}

/// A raw trace record, as produced by collection or by an external model run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: String,
    #[serde(alias = "statement")]
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_answer: Option<String>,
    pub output: String,
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub dataset: String,
    #[serde(default = "empty_object")]
    pub meta: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(serde_json::Map::new())
}

impl TraceRecord {
    /// The gold answer classified for verification, when present.
    pub fn gold(&self) -> Option<GoldAnswer> {
        self.gold_answer.as_deref().map(GoldAnswer::classify)
    }

    /// Insert or replace a key in `meta`, promoting non-object meta to an
    /// object first.
    pub fn set_meta(&mut self, key: &str, value: serde_json::Value) {
        if !self.meta.is_object() {
            self.meta = empty_object();
        }
        self.meta
            .as_object_mut()
            .expect("meta is an object")
            .insert(key.to_string(), value);
    }

    /// Numeric meta field lookup (e.g. provider token counts).
    pub fn meta_u64(&self, key: &str) -> Option<u64> {
        self.meta.get(key).and_then(serde_json::Value::as_u64)
    }
}

/// Reward components as serialized on scored records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardValues {
    pub corr: f64,
    #[serde(rename = "struct")]
    pub structure: f64,
    #[serde(rename = "ref")]
    pub reference: f64,
    pub conf: f64,
    pub miss: u8,
    pub total: f64,
}

impl From<crate::reward::RewardBreakdown> for RewardValues {
    fn from(b: crate::reward::RewardBreakdown) -> Self {
        RewardValues {
            corr: b.r_corr,
            structure: b.r_struct,
            reference: b.r_ref,
            conf: b.r_conf,
            miss: b.delta_miss,
            total: b.total,
        }
    }
}

/// A trace record plus its scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRecord {
    #[serde(flatten)]
    pub record: TraceRecord,
    pub rewards: RewardValues,
    /// Group-relative advantage; null when the record was scored alone.
    pub advantage: Option<f64>,
}

/// Which corpus split a problem belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    SftPool,
    GrpoFailed,
    GrpoFresh,
    Eval,
}

/// One problem: id, statement, gold answer, provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub id: String,
    #[serde(alias = "problem")]
    pub statement: String,
    pub gold_answer: String,
    #[serde(default)]
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl ProblemRecord {
    pub fn gold(&self) -> GoldAnswer {
        GoldAnswer::classify(self.gold_answer.clone())
    }
}

/// Read a JSONL file into typed records, reporting the offending line on
/// parse failure. Blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, RecordError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| RecordError::Io { path: display.clone(), source })?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| RecordError::Io { path: display.clone(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|source| RecordError::Parse {
            path: display.clone(),
            line: i + 1,
            source,
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Write records as JSONL, one compact object per line. Returns the number
/// of lines written.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<usize, RecordError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::create(path).map_err(|source| RecordError::Io { path: display.clone(), source })?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(|source| RecordError::Parse {
            path: display.clone(),
            line: 0,
            source,
        })?;
        w.write_all(line.as_bytes())
            .and_then(|()| w.write_all(b"\n"))
            .map_err(|source| RecordError::Io { path: display.clone(), source })?;
    }
    w.flush().map_err(|source| RecordError::Io { path: display, source })?;
    Ok(items.len())
}

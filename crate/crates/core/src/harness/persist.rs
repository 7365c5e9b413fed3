//! `frontier.json` and its CSV mirror.
//!
//! ```json
//! {
//!   "meta": {"schema_version": 1, "dataset": "synthetic", "generated_at": "...", "master_seed": 0},
//!   "records": [{"framework": "fairpate", "eps_spec": 1.0, "fairness_spec": 0.05,
//!                "eps_achieved": 0.98, "max_disparity": 0.04, "accuracy": 0.91,
//!                "coverage": 0.62, "seed": 123, "flags": ["budget_halted"]}]
//! }
//! ```

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::ExperimentRecord;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

const META_FIELDS: [&str; 4] = ["schema_version", "dataset", "generated_at", "master_seed"];
const RECORD_FIELDS: [&str; 9] = [
    "framework",
    "eps_spec",
    "fairness_spec",
    "eps_achieved",
    "max_disparity",
    "accuracy",
    "coverage",
    "seed",
    "flags",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierMeta {
    pub schema_version: u32,
    pub dataset: String,
    pub generated_at: String,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierDocument {
    pub meta: FrontierMeta,
    pub records: Vec<ExperimentRecord>,
}

impl FrontierDocument {
    pub fn new(dataset: impl Into<String>, generated_at: impl Into<String>, master_seed: u64, records: Vec<ExperimentRecord>) -> Self {
        Self {
            meta: FrontierMeta {
                schema_version: SCHEMA_VERSION,
                dataset: dataset.into(),
                generated_at: generated_at.into(),
                master_seed,
            },
            records,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::from)?;
        text.push('\n');
        Ok(text)
    }

    /// Parses a document. Unknown fields are ignored with a warning; the
    /// names of those fields are returned as well.
    pub fn from_json_with_warnings(text: &str) -> Result<(Self, Vec<String>)> {
        let parse_error = |e: serde_json::Error| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(parse_error)?;
        let version = value
            .get("meta")
            .and_then(|m| m.get("schema_version"))
            .and_then(serde_json::Value::as_u64);
        if let Some(v) = version {
            if v != u64::from(SCHEMA_VERSION) {
                return Err(Error::Schema {
                    found: u32::try_from(v).unwrap_or(u32::MAX),
                    expected: SCHEMA_VERSION,
                });
            }
        }
        let doc: FrontierDocument = serde_json::from_str(text).map_err(parse_error)?;
        let warnings = unknown_fields(&value);
        for w in &warnings {
            log::warn!("ignoring unknown field {w}");
        }
        Ok((doc, warnings))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(Self::from_json_with_warnings(text)?.0)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn unknown_fields(value: &serde_json::Value) -> Vec<String> {
    let mut out = Vec::new();
    let Some(root) = value.as_object() else {
        return out;
    };
    for key in root.keys().filter(|k| !["meta", "records"].contains(&k.as_str())) {
        out.push(key.clone());
    }
    if let Some(meta) = root.get("meta").and_then(|m| m.as_object()) {
        out.extend(meta.keys().filter(|k| !META_FIELDS.contains(&k.as_str())).map(|k| format!("meta.{k}")));
    }
    if let Some(records) = root.get("records").and_then(|r| r.as_array()) {
        for (i, r) in records.iter().enumerate() {
            if let Some(obj) = r.as_object() {
                out.extend(
                    obj.keys()
                        .filter(|k| !RECORD_FIELDS.contains(&k.as_str()))
                        .map(|k| format!("records[{i}].{k}")),
                );
            }
        }
    }
    out
}

/// CSV with the record field names as columns; flags are joined by `;`.
pub fn write_records_csv<W: Write>(writer: W, records: &[ExperimentRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(RECORD_FIELDS)?;
    for r in records {
        out.write_record([
            r.framework.as_str().to_string(),
            r.eps_spec.to_string(),
            r.fairness_spec.to_string(),
            r.eps_achieved.to_string(),
            r.max_disparity.to_string(),
            r.accuracy.to_string(),
            r.coverage.to_string(),
            r.seed.to_string(),
            r.flags.join(";"),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Framework;

    fn sample() -> FrontierDocument {
        let records = vec![
            ExperimentRecord {
                framework: Framework::Fairpate,
                eps_spec: 1.0,
                fairness_spec: 0.05,
                eps_achieved: 0.987654,
                max_disparity: 0.04,
                accuracy: 0.91,
                coverage: 0.62,
                seed: 123,
                flags: vec!["budget_halted".into()],
            },
            ExperimentRecord {
                framework: Framework::Fairdpsgd,
                eps_spec: 2.0,
                fairness_spec: 1.0,
                eps_achieved: 2.0,
                max_disparity: 0.1,
                accuracy: 0.85,
                coverage: 0.99,
                seed: 5,
                flags: Vec::new(),
            },
        ];
        FrontierDocument::new("synthetic", "2026-01-01T00:00:00Z", 42, records)
    }

    #[test]
    fn round_trip() {
        let doc = sample();
        assert_eq!(FrontierDocument::from_json(&doc.to_json().unwrap()).unwrap(), doc);
        let empty = FrontierDocument::new("x", "t", 0, Vec::new());
        let text = empty.to_json().unwrap();
        assert!(text.contains("\"records\": []"));
        assert_eq!(FrontierDocument::from_json(&text).unwrap(), empty);
    }

    #[test]
    fn unknown_fields_are_reported() {
        let mut value: serde_json::Value = serde_json::from_str(&sample().to_json().unwrap()).unwrap();
        value["records"][0]["note"] = "hi".into();
        value["meta"]["tool"] = "x".into();
        let (doc, warnings) = FrontierDocument::from_json_with_warnings(&value.to_string()).unwrap();
        assert_eq!(doc, sample());
        assert_eq!(warnings, vec!["meta.tool".to_string(), "records[0].note".to_string()]);
    }

    #[test]
    fn malformed_input() {
        let text = sample().to_json().unwrap();
        let truncated = &text[..text.len() / 2];
        assert!(matches!(FrontierDocument::from_json(truncated), Err(Error::Parse { .. })));
        let bad = text.replace("\"accuracy\": 0.91", "\"accuracy\": \"high\"");
        match FrontierDocument::from_json(&bad) {
            Err(Error::Parse { line, message, .. }) => {
                assert!(line > 1);
                assert!(message.contains("invalid type"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let future = text.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(FrontierDocument::from_json(&future), Err(Error::Schema { found: 2, .. })));
    }

    #[test]
    fn csv_mirror() {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &sample().records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RECORD_FIELDS.join(","));
        assert_eq!(lines.next().unwrap(), "fairpate,1,0.05,0.987654,0.04,0.91,0.62,123,budget_halted");
    }
}

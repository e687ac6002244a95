use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::protocol::{AggregateReport, MetricsReport};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Writes `value` as pretty JSON wrapped with `schema`, `version` and `tool` fields.
pub fn write_versioned<T: Serialize>(schema: &str, value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut body = serde_json::to_value(value)?;
    let Value::Object(fields) = &mut body else {
        return Err(Error::usage("versioned documents must serialize to an object"));
    };
    let mut doc = serde_json::Map::new();
    doc.insert("schema".into(), json!(schema));
    doc.insert("version".into(), json!(REPORT_SCHEMA_VERSION));
    doc.insert("tool".into(), json!(crate::TOOL_VERSION));
    doc.append(fields);
    let text = serde_json::to_string_pretty(&Value::Object(doc))? + "\n";
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_versioned<T: DeserializeOwned>(schema: &str, path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut doc: Value = serde_json::from_str(&text)?;
    let what = path.display().to_string();
    let Value::Object(fields) = &mut doc else {
        return Err(Error::data(format!("{what}: expected a JSON object")));
    };
    match fields.remove("schema") {
        Some(Value::String(s)) if s == schema => {}
        other => {
            return Err(Error::data(format!(
                "{what}: expected schema `{schema}`, found {}",
                other.map_or_else(|| "none".to_string(), |v| v.to_string())
            )))
        }
    }
    let version = fields.remove("version").and_then(|v| v.as_u64());
    match version {
        Some(v) if v == u64::from(REPORT_SCHEMA_VERSION) => {}
        Some(found) => {
            return Err(Error::SchemaVersion {
                what,
                found,
                expected: REPORT_SCHEMA_VERSION,
            })
        }
        None => return Err(Error::data(format!("{what}: missing schema version"))),
    }
    fields.remove("tool");
    Ok(serde_json::from_value(doc)?)
}

pub fn write_report(report: &MetricsReport, path: impl AsRef<Path>) -> Result<()> {
    write_versioned("run-report", report, path)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<MetricsReport> {
    read_versioned("run-report", path)
}

pub fn write_aggregate(report: &AggregateReport, path: impl AsRef<Path>) -> Result<()> {
    write_versioned("aggregate-report", report, path)
}

pub fn read_aggregate(path: impl AsRef<Path>) -> Result<AggregateReport> {
    read_versioned("aggregate-report", path)
}

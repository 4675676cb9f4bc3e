//! File writers. JSON keys are sorted; CSV floats use the shortest
//! round-trip representation.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, Result};

/// Pretty JSON with keys in sorted order.
pub fn sorted_json<T: Serialize>(value: &T) -> String {
    let v: Value = serde_json::to_value(value).expect("output types serialize to JSON");
    serde_json::to_string_pretty(&sort(v)).expect("JSON values always print")
}

fn sort(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort).collect()),
        other => other,
    }
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(write_err(dir))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(write_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = sorted_json(value);
    text.push('\n');
    write_text(path, &text)
}

/// One compact sorted JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut text = String::new();
    for row in rows {
        let v = sort(serde_json::to_value(row).expect("output types serialize to JSON"));
        text.push_str(&v.to_string());
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let to_io = |e: csv::Error| std::io::Error::other(e.to_string());
    let mut w = csv::Writer::from_path(path)
        .map_err(to_io)
        .map_err(write_err(path))?;
    w.write_record(header)
        .map_err(to_io)
        .map_err(write_err(path))?;
    for r in rows {
        w.write_record(r).map_err(to_io).map_err(write_err(path))?;
    }
    w.flush().map_err(write_err(path))
}

/// Run metadata. Kept apart from results so those stay byte-identical.
pub fn write_meta(dir: &Path, command: &str) -> Result<PathBuf> {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let path = dir.join("meta.json");
    write_json(
        &path,
        &json!({
            "command": command,
            "timestamp_unix": secs,
            "version": env!("CARGO_PKG_VERSION"),
        }),
    )?;
    Ok(path)
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::exit::Failure;

pub const SCHEMA_VERSION: u32 = 1;

/// Reports carry no optional fields, so a `null` can only be a NaN or an
/// infinity that serde_json mapped to null.
fn first_null(v: &Value, path: &str) -> Option<String> {
    match v {
        Value::Null => Some(path.to_string()),
        Value::Array(xs) => xs.iter().enumerate().find_map(|(i, x)| first_null(x, &format!("{path}[{i}]"))),
        Value::Object(m) => m.iter().find_map(|(k, x)| first_null(x, &format!("{path}.{k}"))),
        _ => None,
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String, Failure> {
    let v = serde_json::to_value(doc).map_err(|e| Failure::numeric(e.to_string()))?;
    if let Some(path) = first_null(&v, "$") {
        return Err(Failure::numeric(format!("non-finite value at {path}")));
    }
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Failure::numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// CSV with a header row; fails on any non-finite number.
pub fn to_csv<R: Serialize>(rows: &[R]) -> Result<String, Failure> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::numeric(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::numeric(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::numeric(e.to_string()))
}

pub fn check_finite(values: &[f64], what: &str) -> Result<(), Failure> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Failure::numeric(format!("non-finite value in {what}, column {i}"))),
        None => Ok(()),
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if !(n.is_i64() || n.is_u64()) => {
                serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number)
            }
            _ => Value::Number(n),
        },
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

fn json_error(e: serde_json::Error) -> CliError {
    CliError::Input(format!("cannot serialize output: {e}"))
}

/// Pretty JSON with every float rounded.
pub fn rounded_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(json_error)?;
    serde_json::to_string_pretty(&round_value(v)).map_err(json_error)
}

/// Pretty JSON at full precision, for files meant to be read back.
pub fn exact_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(json_error)
}

/// Formats a number for CSV; non-finite and missing values are left empty.
pub fn cell(x: Option<f64>) -> String {
    match x {
        Some(x) if x.is_finite() => round_sig(x).to_string(),
        _ => String::new(),
    }
}

pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_error = |e: csv::Error| CliError::Input(format!("cannot write csv: {e}"));
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(format!("cannot write csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `content` to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    let mut text = content.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

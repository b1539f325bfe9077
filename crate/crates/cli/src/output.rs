//! Output conventions: every float is emitted with 10 significant digits, in
//! both JSON and CSV, so the two formats carry identical numeric values.

use serde::Serialize;
use serde_json::Value;

/// Rounds to 10 significant digits (the value `{:.9e}` formatting prints).
pub fn sig10(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        x
    } else {
        format!("{x:.9e}").parse().unwrap_or(x)
    }
}

/// Canonical float formatting for CSV cells; parses back to `sig10(x)`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.9e}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(sig10(f)) {
                        *n = rounded;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes a report to a JSON document with all floats rounded to 10
/// significant digits.
pub fn to_json<T: Serialize>(report: &T) -> anyhow::Result<String> {
    let mut value = serde_json::to_value(report)?;
    round_value(&mut value);
    Ok(serde_json::to_string_pretty(&value)?)
}

/// Builds a CSV document from a header and rows of pre-formatted cells.
pub fn to_csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

//! Canonical JSON output: object keys sorted, floats printed with exactly
//! three decimals, integers verbatim. Two documents that hold the same data
//! serialize to the same bytes, which is what makes generated artifacts
//! diffable and hashable.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;

/// Serialize `value` in canonical form. `pretty` selects two-space indented
/// output (instance documents); otherwise a single line (record streams).
pub fn to_canonical_string<T: Serialize + ?Sized>(
    value: &T,
    pretty: bool,
) -> Result<String, serde_json::Error> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, pretty, 0);
    if pretty {
        out.push('\n');
    }
    Ok(out)
}

/// One canonical record per line, each line newline-terminated.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> Result<String, serde_json::Error> {
    let mut out = String::new();
    for r in records {
        out.push_str(&to_canonical_string(r, false)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parse a line-oriented record stream. Blank lines are skipped; the error
/// carries the 1-based line number.
pub fn from_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|source| JsonlError {
            line: i + 1,
            source,
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
#[error("line {line}: {source}")]
pub struct JsonlError {
    pub line: usize,
    #[source]
    pub source: serde_json::Error,
}

pub fn format_float(f: f64) -> String {
    let s = format!("{f:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn write_value(out: &mut String, v: &Value, pretty: bool, depth: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap_or(0.0)));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"))
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, pretty, depth + 1);
                write_value(out, item, pretty, depth + 1);
            }
            newline(out, pretty, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, pretty, depth + 1);
                out.push_str(&serde_json::to_string(k).expect("key serialization is infallible"));
                out.push(':');
                if pretty {
                    out.push(' ');
                }
                write_value(out, &map[*k], pretty, depth + 1);
            }
            newline(out, pretty, depth);
            out.push('}');
        }
    }
}

fn newline(out: &mut String, pretty: bool, depth: usize) {
    if pretty {
        out.push('\n');
        for _ in 0..depth {
            out.push_str("  ");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let v = json!({"b": 1.5, "a": [2, 0.1234], "c": {"z": null, "y": "q\"x"}});
        let s = to_canonical_string(&v, false).unwrap();
        assert_eq!(s, r#"{"a":[2,0.123],"b":1.500,"c":{"y":"q\"x","z":null}}"#);
    }

    #[test]
    fn negative_zero_normalized() {
        assert_eq!(format_float(-0.0001), "0.000");
    }

    #[test]
    fn pretty_layout() {
        let v = json!({"a": [1], "b": {}});
        let s = to_canonical_string(&v, true).unwrap();
        assert_eq!(s, "{\n  \"a\": [\n    1\n  ],\n  \"b\": {}\n}\n");
    }

    #[test]
    fn jsonl_reports_line() {
        let err = from_jsonl::<Value>("{}\n\n{bad\n").unwrap_err();
        assert_eq!(err.line, 3);
    }
}

//! Canonical `.mugen.json` encoding of episodes.
//!
//! Object keys are sorted, there is no whitespace, every real is written
//! with exactly four decimals and the checksum is a 16-digit lowercase hex
//! string. Because the simulator already quantizes state to 1e-4, decoding
//! and re-encoding reproduces the input bytes exactly.

use std::fmt::Write as _;

use mugenforge_core::episode::EpisodeError;
use mugenforge_core::{EpisodeMetadata, SCHEMA_VERSION};
use serde_json::{Map, Value};
use thiserror::Error;

pub const EXTENSION: &str = ".mugen.json";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("episode invariant violated: {0}")]
    InvariantViolation(String),
    #[error("malformed episode file: {0}")]
    ParseError(String),
    #[error("unsupported schema version {found:?}, expected {SCHEMA_VERSION:?}")]
    SchemaMismatch { found: String },
    #[error("stored checksum {stored:016x} does not match recomputed {computed:016x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
}

pub fn serialize_episode(ep: &EpisodeMetadata) -> Result<Vec<u8>, CodecError> {
    ep.check().map_err(|e| CodecError::InvariantViolation(e.to_string()))?;
    let mut v = serde_json::to_value(ep).map_err(|e| CodecError::InvariantViolation(e.to_string()))?;
    v["checksum"] = Value::String(format!("{:016x}", ep.checksum));
    let mut out = String::with_capacity(ep.frames.len() * 512);
    write_canonical(&v, &mut out)?;
    Ok(out.into_bytes())
}

/// Checks run in order: JSON syntax, schema version, structure, checksum,
/// then the remaining episode invariants.
pub fn deserialize_episode(bytes: &[u8]) -> Result<EpisodeMetadata, CodecError> {
    let parse = |m: String| CodecError::ParseError(m);
    let mut v: Value = serde_json::from_slice(bytes).map_err(|e| parse(e.to_string()))?;
    match v.get("schema_version") {
        Some(Value::String(s)) if s == SCHEMA_VERSION => {}
        Some(Value::String(s)) => return Err(CodecError::SchemaMismatch { found: s.clone() }),
        _ => return Err(parse("missing schema_version".into())),
    }
    let hex = v.get("checksum").and_then(Value::as_str).ok_or_else(|| parse("checksum must be a hex string".into()))?;
    if hex.len() != 16 {
        return Err(parse(format!("checksum {hex:?} is not 16 hex digits")));
    }
    let stored = u64::from_str_radix(hex, 16).map_err(|e| parse(format!("checksum {hex:?}: {e}")))?;
    v["checksum"] = Value::from(stored);
    let ep: EpisodeMetadata = serde_json::from_value(v).map_err(|e| parse(e.to_string()))?;
    let computed = ep.compute_checksum();
    if computed != stored {
        return Err(CodecError::ChecksumMismatch { stored, computed });
    }
    ep.check().map_err(|e| match e {
        EpisodeError::InvariantViolation(m) => CodecError::InvariantViolation(m),
        other => CodecError::InvariantViolation(other.to_string()),
    })?;
    Ok(ep)
}

/// Canonical text of an arbitrary JSON value, with the same rules as episodes.
pub fn canonical_json(v: &Value) -> Result<String, CodecError> {
    let mut out = String::new();
    write_canonical(v, &mut out)?;
    Ok(out)
}

fn write_canonical(v: &Value, out: &mut String) -> Result<(), CodecError> {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                write!(out, "{u}").expect("write to String");
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").expect("write to String");
            } else {
                let x = n.as_f64().expect("number is integral or real");
                if !x.is_finite() {
                    return Err(CodecError::InvariantViolation(format!("non-finite real {x}")));
                }
                let s = format!("{x:.4}");
                out.push_str(if s == "-0.0000" { "0.0000" } else { &s });
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings always encode")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out)?;
            }
            out.push(']');
        }
        Value::Object(map) => write_object(map, out)?,
    }
    Ok(())
}

fn write_object(map: &Map<String, Value>, out: &mut String) -> Result<(), CodecError> {
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort();
    out.push('{');
    for (i, k) in keys.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&serde_json::to_string(k).expect("strings always encode"));
        out.push(':');
        write_canonical(&map[k], out)?;
    }
    out.push('}');
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn canonical_form() {
        let v = json!({"b": [1, -2, 0.5, -0.0, 1e-5], "a": {"z": null, "y": true}, "c": "q\""});
        assert_eq!(canonical_json(&v).unwrap(), r#"{"a":{"y":true,"z":null},"b":[1,-2,0.5000,0.0000,0.0000],"c":"q\""}"#);
    }
}

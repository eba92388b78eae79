#![allow(dead_code)]

//! Shared helpers for the CLI tests: running the binary and a small
//! structural JSON-schema validator covering the subset the shipped schemas
//! use (type, properties, required, items, enum, additionalProperties, $ref).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_brinkmann"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

pub fn load_schema(name: &str) -> Value {
    let path = schema_dir().join(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    serde_json::from_str(&text).expect("schema parses")
}

fn type_matches(value: &Value, ty: &str) -> bool {
    match ty {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        "number" => value.is_number(),
        "integer" => value.as_i64().is_some() || value.as_u64().is_some(),
        other => panic!("unsupported schema type {other}"),
    }
}

pub fn validate(value: &Value, schema: &Value, at: &str) -> Result<(), String> {
    let obj = schema
        .as_object()
        .ok_or_else(|| format!("{at}: schema node is not an object"))?;
    if let Some(r) = obj.get("$ref").and_then(Value::as_str) {
        let referenced = load_schema(r);
        return validate(value, &referenced, at);
    }
    if let Some(ty) = obj.get("type") {
        let ok = match ty {
            Value::String(s) => type_matches(value, s),
            Value::Array(options) => options
                .iter()
                .filter_map(Value::as_str)
                .any(|s| type_matches(value, s)),
            _ => return Err(format!("{at}: malformed type specifier")),
        };
        if !ok {
            return Err(format!("{at}: value {value} does not match type {ty}"));
        }
    }
    if let Some(options) = obj.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            return Err(format!("{at}: value {value} not in enum"));
        }
    }
    if let Some(props) = obj.get("properties").and_then(Value::as_object) {
        if let Some(map) = value.as_object() {
            for (k, sub) in props {
                if let Some(v) = map.get(k) {
                    validate(v, sub, &format!("{at}.{k}"))?;
                }
            }
            if obj.get("additionalProperties") == Some(&Value::Bool(false)) {
                for k in map.keys() {
                    if !props.contains_key(k) {
                        return Err(format!("{at}: unexpected property `{k}`"));
                    }
                }
            }
        }
    }
    if let Some(required) = obj.get("required").and_then(Value::as_array) {
        let map = value
            .as_object()
            .ok_or_else(|| format!("{at}: required fields on a non-object"))?;
        for k in required.iter().filter_map(Value::as_str) {
            if !map.contains_key(k) {
                return Err(format!("{at}: missing required property `{k}`"));
            }
        }
    }
    if let Some(items) = obj.get("items") {
        if let Some(arr) = value.as_array() {
            for (i, v) in arr.iter().enumerate() {
                validate(v, items, &format!("{at}[{i}]"))?;
            }
        }
    }
    Ok(())
}

pub fn assert_valid(json_path: &Path, schema_name: &str) {
    let text = std::fs::read_to_string(json_path).expect("output exists");
    let value: Value = serde_json::from_str(&text).expect("output is JSON");
    let schema = load_schema(schema_name);
    if let Err(e) = validate(&value, &schema, "$") {
        panic!("{} fails {schema_name}: {e}", json_path.display());
    }
}

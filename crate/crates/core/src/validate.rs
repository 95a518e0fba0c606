//! Instance validation over the supported schema subset.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::mapping::SchemaMapping;
use crate::path::Path;
use crate::schema::{Kind, Schema, SchemaNode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub path: Path,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub confidence_ok: bool,
}

impl ValidationResult {
    pub fn passes(&self) -> bool {
        self.valid && self.confidence_ok
    }
}

/// Collects every violation of `value` against `schema`. Unknown
/// properties are allowed.
pub fn validate_instance(value: &Value, schema: &Schema) -> Vec<Violation> {
    let mut out = Vec::new();
    check(value, schema.root(), &Path::root(), &mut out);
    out
}

pub fn is_valid(value: &Value, schema: &Schema) -> bool {
    validate_instance(value, schema).is_empty()
}

/// Schema conformance plus the mapping confidence floor. An empty mapping
/// has no confidence to fall short of.
pub fn validate_output(
    output: &Value,
    target: &Schema,
    min_confidence: f64,
    mapping: &SchemaMapping,
) -> ValidationResult {
    let violations = validate_instance(output, target);
    let confidence_ok = mapping.min_confidence().is_none_or(|c| c >= min_confidence);
    ValidationResult { valid: violations.is_empty(), violations, confidence_ok }
}

pub fn kind_matches(value: &Value, kind: Kind) -> bool {
    match kind {
        Kind::Object => value.is_object(),
        Kind::Array => value.is_array(),
        Kind::String => value.is_string(),
        Kind::Number => value.is_number(),
        Kind::Integer => match value {
            Value::Number(n) => {
                n.is_i64() || n.is_u64() || n.as_f64().is_some_and(|f| f.is_finite() && libm::trunc(f) == f)
            }
            _ => false,
        },
        Kind::Boolean => value.is_boolean(),
        Kind::Null => value.is_null(),
    }
}

fn type_name(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(n) if n.is_f64() => "number",
        Value::Number(_) => "integer",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn check(value: &Value, node: &SchemaNode, at: &Path, out: &mut Vec<Violation>) {
    if value.is_null() && node.nullable {
        return;
    }
    if !kind_matches(value, node.kind) {
        out.push(Violation { path: at.clone(), reason: format!("expected {}, found {}", node.kind, type_name(value)) });
        return;
    }
    if let Some(allowed) = &node.enum_values {
        if !allowed.iter().any(|a| crate::metrics::json_equal(a, value, 0.0)) {
            out.push(Violation { path: at.clone(), reason: format!("value {value} not in enum") });
        }
    }
    match (value, node.kind) {
        (Value::Object(map), Kind::Object) => {
            for name in &node.required {
                if !map.contains_key(name) {
                    out.push(Violation { path: at.child(name), reason: "required property missing".into() });
                }
            }
            for (name, child) in &node.properties {
                if let Some(v) = map.get(name) {
                    check(v, child, &at.child(name), out);
                }
            }
        }
        (Value::Array(items), Kind::Array) => {
            if let Some(item_node) = &node.items {
                let item_path = at.items();
                for item in items {
                    check(item, item_node, &item_path, out);
                }
            }
        }
        _ => {}
    }
}

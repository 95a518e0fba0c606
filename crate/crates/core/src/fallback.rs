//! Deterministic last-resort transformation.
//!
//! Target leaves are paired with source leaves by name similarity, values
//! are unit-converted, coerced to the target kind and reshaped between
//! scalar and array form. Required leaves with no usable source get the
//! kind's zero value. No step can fail: anything that does not fit is
//! dropped or zero-filled.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde_json::{Map, Value};

use crate::adapter::eval::{read_path, stringify, write_path};
use crate::adapter::iso8601_to_epoch;
use crate::path::Path;
use crate::schema::{Kind, Schema, SchemaNode};
use crate::similarity::similarity_ratio;
use crate::units::{canonical_unit, name_tokens, unit_from_name, UnitRegistry};

/// Minimum name similarity for a source leaf to fill a target leaf.
pub const SIMILARITY_CUTOFF: f64 = 0.6;

/// Name forms compared between two leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameForms {
    /// Every field name on the path, unit tokens removed, joined.
    pub full: String,
    /// Leaf name with unit tokens removed.
    pub leaf: String,
    /// Last non-unit token of the leaf name.
    pub core: String,
}

fn strip_units(tokens: Vec<String>) -> Vec<String> {
    if tokens.len() < 2 {
        return tokens;
    }
    let kept: Vec<String> = tokens.iter().filter(|t| canonical_unit(t).is_none()).cloned().collect();
    if kept.is_empty() {
        tokens
    } else {
        kept
    }
}

impl NameForms {
    pub fn of(path: &Path) -> Self {
        let fields: Vec<&str> = path
            .segments()
            .iter()
            .filter_map(|s| match s {
                crate::path::Segment::Field(name) => Some(name.as_str()),
                crate::path::Segment::Items => None,
            })
            .collect();
        let full_tokens: Vec<String> = fields.iter().flat_map(|f| strip_units(name_tokens(f))).collect();
        let leaf_tokens = strip_units(name_tokens(fields.last().copied().unwrap_or("")));
        Self {
            full: full_tokens.concat(),
            core: leaf_tokens.last().cloned().unwrap_or_default(),
            leaf: leaf_tokens.concat(),
        }
    }
}

/// Best ratio over the full-path, leaf and core-token forms.
pub fn name_similarity(a: &Path, b: &Path) -> f64 {
    let (x, y) = (NameForms::of(a), NameForms::of(b));
    [(&x.full, &y.full), (&x.leaf, &y.leaf), (&x.core, &y.core)]
        .into_iter()
        .filter(|(p, q)| !p.is_empty() && !q.is_empty())
        .map(|(p, q)| similarity_ratio(p, q))
        .fold(0.0, f64::max)
}

/// Greedy pairing by descending similarity, ties broken by target path then
/// source path; each leaf is used at most once.
pub fn pair_leaves(source: &Schema, target: &Schema) -> Vec<(Path, Path, f64)> {
    let sources: Vec<Path> = source.leaf_paths().into_iter().collect();
    let targets: Vec<Path> = target.leaf_paths().into_iter().collect();
    let mut scored = Vec::new();
    for t in &targets {
        for s in &sources {
            let score = name_similarity(s, t);
            if score >= SIMILARITY_CUTOFF {
                scored.push((score, t, s));
            }
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)).then_with(|| a.2.cmp(b.2)));
    let mut used_s = BTreeSet::new();
    let mut used_t = BTreeSet::new();
    let mut pairs = Vec::new();
    for (score, t, s) in scored {
        if used_t.contains(t) || used_s.contains(s) {
            continue;
        }
        used_t.insert(t);
        used_s.insert(s);
        pairs.push((s.clone(), t.clone(), score));
    }
    pairs.sort_by(|a, b| a.1.cmp(&b.1));
    pairs
}

fn leaf_unit(schema: &Schema, path: &Path) -> Option<&'static str> {
    schema
        .node_at(path)
        .and_then(|n| n.unit_hint.as_deref())
        .and_then(canonical_unit)
        .or_else(|| path.leaf_name().and_then(unit_from_name))
}

fn convert_numbers(value: Value, f: &dyn Fn(f64) -> Option<f64>) -> Value {
    match value {
        Value::Array(items) => Value::Array(items.into_iter().map(|v| convert_numbers(v, f)).collect()),
        Value::Number(n) => match n.as_f64().and_then(f).and_then(serde_json::Number::from_f64) {
            Some(out) => Value::Number(out),
            None => Value::Number(n),
        },
        other => other,
    }
}

fn coerce_scalar(value: &Value, node: &SchemaNode) -> Option<Value> {
    if node.nullable && value.is_null() {
        return Some(Value::Null);
    }
    match node.kind {
        Kind::String => match value {
            Value::String(_) => Some(value.clone()),
            Value::Number(_) | Value::Bool(_) => Some(Value::String(stringify(value))),
            _ => None,
        },
        Kind::Integer => match value {
            Value::Number(n) if n.is_i64() || n.is_u64() => Some(value.clone()),
            Value::Number(n) => {
                n.as_f64().filter(|f| f.is_finite() && f.abs() < 9.0e15).map(|f| Value::from(libm::round(f) as i64))
            }
            Value::String(s) => {
                let s = s.trim();
                s.parse::<i64>()
                    .ok()
                    .or_else(|| iso8601_to_epoch(s))
                    .or_else(|| {
                        s.parse::<f64>()
                            .ok()
                            .filter(|f| f.is_finite() && f.abs() < 9.0e15)
                            .map(|f| libm::round(f) as i64)
                    })
                    .map(Value::from)
            }
            Value::Bool(b) => Some(Value::from(i64::from(*b))),
            _ => None,
        },
        Kind::Number => match value {
            Value::Number(_) => Some(value.clone()),
            Value::String(s) => s.trim().parse::<f64>().ok().and_then(serde_json::Number::from_f64).map(Value::Number),
            _ => None,
        },
        Kind::Boolean => match value {
            Value::Bool(_) => Some(value.clone()),
            Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Some(Value::Bool(true)),
                "false" | "no" | "0" => Some(Value::Bool(false)),
                _ => None,
            },
            Value::Number(n) => n.as_f64().map(|f| Value::Bool(f != 0.0)),
            _ => None,
        },
        Kind::Null => Some(Value::Null),
        Kind::Object | Kind::Array => None,
    }
    .and_then(|v| fit_enum(v, node))
}

/// `value` itself if the node allows it, else an enum member equal to it
/// ignoring ASCII case.
fn fit_enum(value: Value, node: &SchemaNode) -> Option<Value> {
    let Some(allowed) = &node.enum_values else { return Some(value) };
    if allowed.contains(&value) {
        return Some(value);
    }
    let text = value.as_str()?;
    allowed.iter().find(|a| a.as_str().is_some_and(|a| a.eq_ignore_ascii_case(text))).cloned()
}

/// Zero-fill value: the first enum member if there is one.
fn zero_for(node: &SchemaNode) -> Value {
    match node.enum_values.as_ref().and_then(|e| e.first()) {
        Some(first) => first.clone(),
        None => node.kind.zero_value(),
    }
}

/// Reshapes `value` from `from` array nesting levels to `to` levels: extra
/// levels take the first element, missing levels wrap.
fn reshape(mut value: Value, mut from: usize, to: usize) -> Option<Value> {
    while from > to {
        value = match value {
            Value::Array(items) => items.into_iter().next()?,
            _ => return None,
        };
        from -= 1;
    }
    while from < to {
        value = Value::Array(vec![value]);
        from += 1;
    }
    Some(value)
}

/// Coerces every scalar at nesting depth `levels`.
fn coerce_nested(value: Value, levels: usize, node: &SchemaNode) -> Option<Value> {
    if levels == 0 {
        return coerce_scalar(&value, node);
    }
    match value {
        Value::Array(items) => {
            items.into_iter().map(|v| coerce_nested(v, levels - 1, node)).collect::<Option<Vec<_>>>().map(Value::Array)
        }
        _ => None,
    }
}

/// Rule-based transformation with the builtin unit table.
pub fn fallback_transform(data: &Value, source: &Schema, target: &Schema) -> Value {
    fallback_transform_with(data, source, target, &UnitRegistry::builtin())
}

/// Rule-based transformation. Total: always returns a JSON object.
pub fn fallback_transform_with(data: &Value, source: &Schema, target: &Schema, units: &UnitRegistry) -> Value {
    let mut out = Value::Object(Map::new());
    let mut filled: BTreeSet<Path> = BTreeSet::new();
    for (s, t, _) in pair_leaves(source, target) {
        let Some(raw) = read_path(data, s.segments()) else { continue };
        let Some(t_node) = target.node_at(&t) else { continue };
        let converted = match (leaf_unit(source, &s), leaf_unit(target, &t)) {
            (Some(from), Some(to)) if from != to => match units.find(from, to) {
                Some(conv) => convert_numbers(raw, &|x| Some(conv.apply(x)).filter(|y| y.is_finite())),
                None => raw,
            },
            _ => raw,
        };
        let levels = t.items_count();
        let Some(shaped) = reshape(converted, s.items_count(), levels) else { continue };
        let Some(value) = coerce_nested(shaped, levels, t_node) else { continue };
        if write_path(&mut out, t.segments(), value, &t).is_ok() {
            filled.insert(t);
        }
    }
    for t in target.leaf_paths() {
        if filled.contains(&t) || !target.is_required(&t) {
            continue;
        }
        if t.has_items() {
            let outer = truncate_at_items(&t);
            if read_path(&out, outer.segments()).is_none() {
                let _ = write_path(&mut out, outer.segments(), Value::Array(Vec::new()), &t);
            }
        } else if let Some(node) = target.node_at(&t) {
            let _ = write_path(&mut out, t.segments(), zero_for(node), &t);
        }
    }
    fill_empty_required_objects(&mut out, target);
    out
}

/// Path up to (not including) the first items marker, so a zero-filled
/// array leaf becomes an empty array at its outermost array.
fn truncate_at_items(path: &Path) -> Path {
    let segments = path.segments();
    let end = segments.iter().position(|s| matches!(s, crate::path::Segment::Items)).unwrap_or(segments.len());
    Path::from_segments(segments[..end].to_vec())
}

/// Required object properties that have no leaves still need to exist.
fn fill_empty_required_objects(out: &mut Value, target: &Schema) {
    fn walk(node: &SchemaNode, slot: &mut Value) {
        let Value::Object(map) = slot else { return };
        for (name, child) in &node.properties {
            if node.required.contains(name) && !map.contains_key(name) {
                map.insert(name.clone(), zero_for(child));
            }
            if child.kind == Kind::Object {
                if let Some(sub) = map.get_mut(name) {
                    walk(child, sub);
                }
            }
        }
    }
    walk(target.root(), out);
}

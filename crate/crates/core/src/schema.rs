//! JSON Schema subset used by routes: `type`, `properties`, `required`,
//! `items`, `enum`, plus the `x-unit`, `format` and `description`
//! annotations. Any other keyword is kept in the canonical text (so it
//! still contributes to the hash) but is otherwise ignored and reported as
//! a [`SchemaWarning`].

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::path::{is_addressable_name, Path, Segment};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Object,
    Array,
    String,
    Number,
    Integer,
    Boolean,
    Null,
}

impl Kind {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "object" => Kind::Object,
            "array" => Kind::Array,
            "string" => Kind::String,
            "number" => Kind::Number,
            "integer" => Kind::Integer,
            "boolean" => Kind::Boolean,
            "null" => Kind::Null,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Object => "object",
            Kind::Array => "array",
            Kind::String => "string",
            Kind::Number => "number",
            Kind::Integer => "integer",
            Kind::Boolean => "boolean",
            Kind::Null => "null",
        }
    }

    pub fn is_scalar(self) -> bool {
        !matches!(self, Kind::Object | Kind::Array)
    }

    /// The value used to fill a required field nobody could supply.
    pub fn zero_value(self) -> Value {
        match self {
            Kind::Object => Value::Object(Map::new()),
            Kind::Array => Value::Array(Vec::new()),
            Kind::String => Value::String(String::new()),
            Kind::Number => serde_json::json!(0.0),
            Kind::Integer => serde_json::json!(0),
            Kind::Boolean => Value::Bool(false),
            Kind::Null => Value::Null,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaNode {
    pub kind: Kind,
    /// `true` when `type` was given as `[<kind>, "null"]`.
    pub nullable: bool,
    pub properties: BTreeMap<String, SchemaNode>,
    pub required: BTreeSet<String>,
    pub items: Option<Box<SchemaNode>>,
    pub enum_values: Option<Vec<Value>>,
    pub unit_hint: Option<String>,
    pub format_hint: Option<String>,
    pub description: Option<String>,
}

impl SchemaNode {
    pub fn scalar(kind: Kind) -> Self {
        Self {
            kind,
            nullable: false,
            properties: BTreeMap::new(),
            required: BTreeSet::new(),
            items: None,
            enum_values: None,
            unit_hint: None,
            format_hint: None,
            description: None,
        }
    }

    /// Item kind for arrays, or the kind itself for everything else.
    pub fn innermost(&self) -> &SchemaNode {
        let mut node = self;
        while let Some(items) = &node.items {
            node = items;
        }
        node
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaWarning {
    pub path: Path,
    pub keyword: String,
}

impl fmt::Display for SchemaWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.path.is_empty() { "<root>".to_string() } else { self.path.to_string() };
        write!(f, "unsupported keyword `{}` at {} ignored", self.keyword, at)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("malformed schema: {0}")]
    MalformedSchema(String),
    #[error("unsupported type `{kind}` at {path}")]
    UnsupportedKind { path: String, kind: String },
}

/// SHA-256 of a schema's canonical text.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchemaHash(pub [u8; 32]);

impl SchemaHash {
    pub fn of_text(text: &str) -> Self {
        let digest = Sha256::digest(text.as_bytes());
        let mut out = [0u8; 32];
        out.copy_from_slice(&digest);
        Self(out)
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(64);
        for b in self.0 {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn from_hex(text: &str) -> Option<Self> {
        if text.len() != 64 || !text.is_ascii() {
            return None;
        }
        let mut out = [0u8; 32];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&text[i * 2..i * 2 + 2], 16).ok()?;
        }
        Some(Self(out))
    }
}

impl fmt::Debug for SchemaHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SchemaHash({})", &self.to_hex()[..12])
    }
}

impl fmt::Display for SchemaHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for SchemaHash {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for SchemaHash {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        SchemaHash::from_hex(&text).ok_or_else(|| serde::de::Error::custom("expected 64 hex digits"))
    }
}

/// Ordered (source, target) schema hash pair; the mapping cache key.
pub type HashPair = (SchemaHash, SchemaHash);

/// A parsed payload schema. Identity is the canonical hash: two schemas that
/// differ only in key order or whitespace compare equal.
#[derive(Debug, Clone)]
pub struct Schema {
    root: SchemaNode,
    raw: String,
    hash: SchemaHash,
    document: Value,
    warnings: Vec<SchemaWarning>,
}

impl PartialEq for Schema {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash
    }
}

impl Eq for Schema {}

impl Schema {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| SchemaError::MalformedSchema(format!("invalid JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_value(document: Value) -> Result<Self, SchemaError> {
        if !document.is_object() {
            return Err(SchemaError::MalformedSchema("schema document must be an object".into()));
        }
        let mut warnings = Vec::new();
        let root = parse_node(&document, &Path::root(), &mut warnings)?;
        if root.kind != Kind::Object {
            return Err(SchemaError::MalformedSchema(format!(
                "root must describe an object body, found `{}`",
                root.kind
            )));
        }
        let raw = canonical_json(&document);
        let hash = SchemaHash::of_text(&raw);
        Ok(Self { root, raw, hash, document, warnings })
    }

    pub fn root(&self) -> &SchemaNode {
        &self.root
    }

    /// Canonical text: sorted keys, no insignificant whitespace.
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn hash(&self) -> SchemaHash {
        self.hash
    }

    pub fn document(&self) -> &Value {
        &self.document
    }

    pub fn warnings(&self) -> &[SchemaWarning] {
        &self.warnings
    }

    /// All root-to-leaf paths. Arrays contribute one items marker; empty
    /// objects contribute nothing.
    pub fn leaf_paths(&self) -> BTreeSet<Path> {
        let mut out = BTreeSet::new();
        collect_leaves(&self.root, &Path::root(), &mut out);
        out
    }

    pub fn node_at(&self, path: &Path) -> Option<&SchemaNode> {
        let mut node = &self.root;
        for seg in path.segments() {
            node = match seg {
                Segment::Field(name) => node.properties.get(name)?,
                Segment::Items => node.items.as_deref()?,
            };
        }
        Some(node)
    }

    /// True when every field on the path is listed in its parent's
    /// `required` set. Items markers do not break the chain.
    pub fn is_required(&self, path: &Path) -> bool {
        let mut node = &self.root;
        for seg in path.segments() {
            match seg {
                Segment::Field(name) => {
                    if !node.required.contains(name) {
                        return false;
                    }
                    match node.properties.get(name) {
                        Some(child) => node = child,
                        None => return false,
                    }
                }
                Segment::Items => match node.items.as_deref() {
                    Some(items) => node = items,
                    None => return false,
                },
            }
        }
        true
    }
}

/// Free-function form of [`Schema::parse`].
pub fn parse_schema(text: &str) -> Result<Schema, SchemaError> {
    Schema::parse(text)
}

/// Free-function form of [`Schema::hash`].
pub fn canonical_hash(schema: &Schema) -> SchemaHash {
    schema.hash()
}

/// Free-function form of [`Schema::leaf_paths`].
pub fn leaf_paths(schema: &Schema) -> BTreeSet<Path> {
    schema.leaf_paths()
}

fn collect_leaves(node: &SchemaNode, at: &Path, out: &mut BTreeSet<Path>) {
    match node.kind {
        Kind::Object => {
            for (name, child) in &node.properties {
                collect_leaves(child, &at.child(name), out);
            }
        }
        Kind::Array => {
            if let Some(items) = &node.items {
                collect_leaves(items, &at.items(), out);
            }
        }
        _ => {
            if !at.is_empty() {
                out.insert(at.clone());
            }
        }
    }
}

const SUPPORTED: &[&str] = &["type", "properties", "required", "items", "enum", "x-unit", "format", "description"];
const SILENT: &[&str] = &["title", "$schema", "$id", "$comment", "default", "examples"];

fn parse_node(value: &Value, at: &Path, warnings: &mut Vec<SchemaWarning>) -> Result<SchemaNode, SchemaError> {
    let obj = value
        .as_object()
        .ok_or_else(|| SchemaError::MalformedSchema(format!("schema at {} is not an object", display_path(at))))?;
    for key in obj.keys() {
        if !SUPPORTED.contains(&key.as_str()) && !SILENT.contains(&key.as_str()) {
            warnings.push(SchemaWarning { path: at.clone(), keyword: key.clone() });
        }
    }

    let (kind, nullable) = match obj.get("type") {
        Some(Value::String(name)) => (parse_kind(name, at)?, false),
        Some(Value::Array(names)) => {
            let names: Vec<&str> = names.iter().filter_map(Value::as_str).collect();
            match names.as_slice() {
                [one] => (parse_kind(one, at)?, false),
                [a, "null"] | ["null", a] if *a != "null" => (parse_kind(a, at)?, true),
                _ => return Err(SchemaError::UnsupportedKind { path: display_path(at), kind: format!("{names:?}") }),
            }
        }
        Some(other) => {
            return Err(SchemaError::MalformedSchema(format!(
                "`type` at {} must be a string, found {other}",
                display_path(at)
            )))
        }
        None if obj.contains_key("properties") => (Kind::Object, false),
        None if obj.contains_key("items") => (Kind::Array, false),
        None => return Err(SchemaError::MalformedSchema(format!("missing `type` at {}", display_path(at)))),
    };

    let description = obj.get("description").and_then(Value::as_str).map(ToOwned::to_owned);
    let unit_hint = obj
        .get("x-unit")
        .and_then(Value::as_str)
        .map(ToOwned::to_owned)
        .or_else(|| description.as_deref().and_then(units::unit_in_text).map(|u| u.to_string()));
    let format_hint = obj.get("format").and_then(Value::as_str).map(ToOwned::to_owned);
    let enum_values = match obj.get("enum") {
        None => None,
        Some(Value::Array(values)) => Some(values.clone()),
        Some(_) => {
            return Err(SchemaError::MalformedSchema(format!("`enum` at {} must be an array", display_path(at))))
        }
    };

    let mut node =
        SchemaNode { kind, nullable, unit_hint, format_hint, description, enum_values, ..SchemaNode::scalar(kind) };

    match kind {
        Kind::Object => {
            if let Some(props) = obj.get("properties") {
                let props = props.as_object().ok_or_else(|| {
                    SchemaError::MalformedSchema(format!("`properties` at {} must be an object", display_path(at)))
                })?;
                for (name, child) in props {
                    if !is_addressable_name(name) {
                        return Err(SchemaError::MalformedSchema(format!(
                            "property name `{name}` at {} cannot be addressed by a dotted path",
                            display_path(at)
                        )));
                    }
                    let parsed = parse_node(child, &at.child(name), warnings)?;
                    node.properties.insert(name.clone(), parsed);
                }
            }
            if let Some(required) = obj.get("required") {
                let required = required.as_array().ok_or_else(|| {
                    SchemaError::MalformedSchema(format!("`required` at {} must be an array", display_path(at)))
                })?;
                for name in required {
                    let name = name.as_str().ok_or_else(|| {
                        SchemaError::MalformedSchema(format!("`required` at {} must list names", display_path(at)))
                    })?;
                    if !node.properties.contains_key(name) {
                        return Err(SchemaError::MalformedSchema(format!(
                            "required property `{name}` at {} is not declared",
                            display_path(at)
                        )));
                    }
                    node.required.insert(name.to_string());
                }
            }
        }
        Kind::Array => {
            let items = obj
                .get("items")
                .ok_or_else(|| SchemaError::MalformedSchema(format!("array at {} has no `items`", display_path(at))))?;
            node.items = Some(Box::new(parse_node(items, &at.items(), warnings)?));
        }
        _ => {
            if obj.contains_key("properties") || obj.contains_key("items") {
                return Err(SchemaError::MalformedSchema(format!(
                    "scalar `{kind}` at {} cannot carry properties or items",
                    display_path(at)
                )));
            }
        }
    }
    Ok(node)
}

fn parse_kind(name: &str, at: &Path) -> Result<Kind, SchemaError> {
    Kind::parse(name).ok_or_else(|| SchemaError::UnsupportedKind { path: display_path(at), kind: name.to_string() })
}

fn display_path(at: &Path) -> String {
    if at.is_empty() {
        "<root>".into()
    } else {
        at.to_string()
    }
}

/// Compact JSON with object keys sorted, independent of how the `Map`
/// type orders its entries.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                write_canonical(&map[key], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use serde_json::json;

    const WEATHER_V1: &str = r#"{
        "type": "object",
        "properties": {
            "city": {"type": "string"},
            "temperature_celsius": {"type": "number", "x-unit": "celsius"},
            "humidity_percent": {"type": "integer"},
            "wind_speed_kmh": {"type": "number"},
            "timestamp": {"type": "string", "format": "date-time"}
        },
        "required": ["city", "temperature_celsius", "humidity_percent", "wind_speed_kmh", "timestamp"]
    }"#;

    const WEATHER_V2: &str = r#"{
        "type": "object",
        "properties": {
            "location": {"type": "object", "properties": {"name": {"type": "string"}}, "required": ["name"]},
            "measurements": {
                "type": "object",
                "properties": {
                    "temp_f": {"type": "number"},
                    "humidity": {"type": "number"},
                    "wind_mph": {"type": "number"}
                }
            },
            "recorded_at": {"type": "integer"}
        },
        "required": ["location", "measurements", "recorded_at"]
    }"#;

    fn paths(list: &[&str]) -> BTreeSet<Path> {
        list.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn minimal_object() {
        let s = Schema::parse(r#"{"type":"object","properties":{"a":{"type":"string"}}}"#).unwrap();
        assert_eq!(s.root().kind, Kind::Object);
        assert_eq!(s.root().properties.len(), 1);
        assert_eq!(s.root().properties["a"].kind, Kind::String);
    }

    #[test]
    fn scalar_root_is_rejected() {
        assert!(matches!(Schema::parse(r#"{"type":"string"}"#), Err(SchemaError::MalformedSchema(_))));
        assert!(matches!(Schema::parse("[1,2]"), Err(SchemaError::MalformedSchema(_))));
        assert!(matches!(Schema::parse("{not json"), Err(SchemaError::MalformedSchema(_))));
    }

    #[test]
    fn unknown_type_is_unsupported() {
        let err = Schema::parse(r#"{"type":"object","properties":{"a":{"type":"decimal"}}}"#).unwrap_err();
        assert_eq!(err, SchemaError::UnsupportedKind { path: "a".into(), kind: "decimal".into() });
    }

    #[test]
    fn required_must_be_declared() {
        let err = Schema::parse(r#"{"type":"object","properties":{},"required":["x"]}"#).unwrap_err();
        assert!(matches!(err, SchemaError::MalformedSchema(_)));
    }

    #[test]
    fn weather_v1_has_five_leaves() {
        let s = Schema::parse(WEATHER_V1).unwrap();
        assert_eq!(
            s.leaf_paths(),
            paths(&["city", "temperature_celsius", "humidity_percent", "wind_speed_kmh", "timestamp"])
        );
        let temp = s.node_at(&"temperature_celsius".parse().unwrap()).unwrap();
        assert_eq!(temp.unit_hint.as_deref(), Some("celsius"));
        let ts = s.node_at(&"timestamp".parse().unwrap()).unwrap();
        assert_eq!(ts.format_hint.as_deref(), Some("date-time"));
    }

    #[test]
    fn weather_v2_leaf_paths() {
        let s = Schema::parse(WEATHER_V2).unwrap();
        assert_eq!(
            s.leaf_paths(),
            paths(&[
                "location.name",
                "measurements.temp_f",
                "measurements.humidity",
                "measurements.wind_mph",
                "recorded_at"
            ])
        );
        assert!(s.is_required(&"location.name".parse().unwrap()));
        assert!(s.is_required(&"recorded_at".parse().unwrap()));
        assert!(!s.is_required(&"measurements.temp_f".parse().unwrap()));
    }

    #[test]
    fn flat_and_empty_leaf_paths() {
        let flat =
            Schema::parse(r#"{"type":"object","properties":{"a":{"type":"string"},"b":{"type":"number"}}}"#).unwrap();
        assert_eq!(flat.leaf_paths(), paths(&["a", "b"]));
        let empty = Schema::parse(r#"{"type":"object","properties":{}}"#).unwrap();
        assert!(empty.leaf_paths().is_empty());
    }

    #[test]
    fn arrays_contribute_items_marker() {
        let s = Schema::parse(
            r#"{"type":"object","properties":{
                "readings":{"type":"array","items":{"type":"number"}},
                "sensors":{"type":"array","items":{"type":"object","properties":{"id":{"type":"string"}}}}
            }}"#,
        )
        .unwrap();
        assert_eq!(s.leaf_paths(), paths(&["readings[]", "sensors[].id"]));
    }

    #[test]
    fn hash_of_empty_object_schema_is_pinned() {
        // sha256 of `{"properties":{},"type":"object"}`, computed with sha256sum.
        let s = Schema::parse(r#"{ "type": "object", "properties": {} }"#).unwrap();
        assert_eq!(s.raw(), r#"{"properties":{},"type":"object"}"#);
        assert_eq!(s.hash().to_hex(), "efddc7bd8bbcef73a14eb1ace1ffdaec81e518ef1e13c1e9271d0b8acb694a49");
    }

    #[test]
    fn hash_ignores_key_order_and_whitespace() {
        let a =
            Schema::parse(r#"{"type":"object","properties":{"x":{"type":"string"},"y":{"type":"number"}}}"#).unwrap();
        let b = Schema::parse(
            "{\n \"properties\" : {\"y\":{\"type\":\"number\"},\n\"x\":{\"type\":\"string\"}},\"type\":\"object\"}",
        )
        .unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a, b);
        let c =
            Schema::parse(r#"{"type":"object","properties":{"x":{"type":"integer"},"y":{"type":"number"}}}"#).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn unsupported_keywords_warn_but_parse() {
        let s = Schema::parse(
            r#"{"type":"object","title":"t","properties":{"a":{"allOf":[{}],"type":"string"}},"patternProperties":{}}"#,
        )
        .unwrap();
        let kws: Vec<_> = s.warnings().iter().map(|w| w.keyword.as_str()).collect();
        assert_eq!(kws, vec!["patternProperties", "allOf"]);
    }

    #[test]
    fn nullable_type_pair() {
        let s = Schema::parse(r#"{"type":"object","properties":{"a":{"type":["string","null"]}}}"#).unwrap();
        let a = &s.root().properties["a"];
        assert_eq!(a.kind, Kind::String);
        assert!(a.nullable);
    }

    #[test]
    fn unit_from_description() {
        let s = Schema::parse(
            r#"{"type":"object","properties":{"t":{"type":"number","description":"Air temperature in degrees Fahrenheit"}}}"#,
        )
        .unwrap();
        assert_eq!(s.root().properties["t"].unit_hint.as_deref(), Some("fahrenheit"));
    }

    #[test]
    fn hash_hex_round_trip() {
        let h = Schema::parse(WEATHER_V1).unwrap().hash();
        assert_eq!(SchemaHash::from_hex(&h.to_hex()), Some(h));
        let json = serde_json::to_value(h).unwrap();
        assert_eq!(json, json!(h.to_hex()));
    }

    /// Re-serializes with object keys in a seeded random order and
    /// irregular whitespace.
    fn shuffled_text(value: &Value, seed: &mut u64) -> String {
        match value {
            Value::Object(map) => {
                let mut entries: Vec<(&String, &Value)> = map.iter().collect();
                for i in (1..entries.len()).rev() {
                    *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let j = (*seed >> 33) as usize % (i + 1);
                    entries.swap(i, j);
                }
                let body: Vec<String> = entries
                    .into_iter()
                    .map(|(k, v)| format!("{} : {}", Value::String(k.clone()), shuffled_text(v, seed)))
                    .collect();
                format!("{{ {} }}", body.join(" ,\n "))
            }
            Value::Array(items) => {
                let body: Vec<String> = items.iter().map(|v| shuffled_text(v, seed)).collect();
                format!("[{}]", body.join(", "))
            }
            other => other.to_string(),
        }
    }

    proptest::proptest! {
        #[test]
        fn hash_is_insensitive_to_key_shuffles(seed in proptest::prelude::any::<u64>()) {
            let base: Value = serde_json::from_str(WEATHER_V2).unwrap();
            let mut s = seed;
            let text = shuffled_text(&base, &mut s);
            let a = Schema::from_value(base).unwrap();
            let b = Schema::parse(&text).unwrap();
            proptest::prop_assert_eq!(a.hash(), b.hash());
        }
    }
}

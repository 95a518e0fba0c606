//! Structured-output contracts for model responses.
//!
//! Every model response is checked here before the pipeline sees it, no
//! matter what the provider promises about output formatting.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::adapter::AdapterProgram;
use crate::mapping::{FieldMapping, SchemaMapping};
use crate::mismatch::{Mismatch, MismatchKind, Origin, Severity};
use crate::path::Path;
use crate::schema::Kind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContractKind {
    MismatchReport,
    SchemaMapping,
    AdapterProgram,
    TransformedData,
}

impl ContractKind {
    pub const ALL: [ContractKind; 4] = [
        ContractKind::MismatchReport,
        ContractKind::SchemaMapping,
        ContractKind::AdapterProgram,
        ContractKind::TransformedData,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ContractKind::MismatchReport => "MismatchReport",
            ContractKind::SchemaMapping => "SchemaMapping",
            ContractKind::AdapterProgram => "AdapterProgram",
            ContractKind::TransformedData => "TransformedData",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == name)
    }

    /// JSON Schema handed to providers that support constrained output.
    pub fn response_schema(self) -> Value {
        let path = json!({"type": ["string", "null"]});
        match self {
            ContractKind::MismatchReport => json!({
                "type": "object",
                "required": ["mismatches"],
                "properties": {"mismatches": {"type": "array", "items": {
                    "type": "object",
                    "required": ["kind", "source_path", "target_path", "detail", "severity"],
                    "properties": {
                        "kind": {"type": "string", "enum": ["naming_mismatch", "unit_mismatch"]},
                        "source_path": path, "target_path": path,
                        "detail": {"type": "string"},
                        "severity": {"type": "string", "enum": ["low", "medium", "high"]}
                    }
                }}}
            }),
            ContractKind::SchemaMapping => json!({
                "type": "object",
                "required": ["mappings"],
                "properties": {"mappings": {"type": "array", "items": {
                    "type": "object",
                    "required": ["source_path", "target_path", "transform", "confidence"],
                    "properties": {
                        "source_path": path,
                        "target_path": {"type": "string"},
                        "transform": {"type": "string"},
                        "confidence": {"type": "number", "minimum": 0, "maximum": 1}
                    }
                }}}
            }),
            ContractKind::AdapterProgram => json!({
                "type": "object",
                "required": ["assignments"],
                "properties": {"assignments": {"type": "array", "items": {
                    "type": "object",
                    "required": ["target", "expr"],
                    "properties": {"target": {"type": "string"}, "expr": {"type": "object"}}
                }}}
            }),
            ContractKind::TransformedData => json!({
                "type": "object",
                "required": ["data"],
                "properties": {"data": {"type": "object"}}
            }),
        }
    }
}

impl fmt::Display for ContractKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} contract violated: {message}")]
pub struct ContractViolation {
    pub kind: ContractKind,
    pub message: String,
}

/// A verified response, one variant per contract.
#[derive(Debug, Clone, PartialEq)]
pub enum ContractResponse {
    MismatchReport(Vec<Mismatch>),
    SchemaMapping(SchemaMapping),
    AdapterProgram(AdapterProgram),
    TransformedData(Value),
}

impl ContractResponse {
    pub fn kind(&self) -> ContractKind {
        match self {
            ContractResponse::MismatchReport(_) => ContractKind::MismatchReport,
            ContractResponse::SchemaMapping(_) => ContractKind::SchemaMapping,
            ContractResponse::AdapterProgram(_) => ContractKind::AdapterProgram,
            ContractResponse::TransformedData(_) => ContractKind::TransformedData,
        }
    }

    /// Wire form accepted back by [`verify_response`].
    pub fn to_wire(&self) -> Value {
        match self {
            ContractResponse::MismatchReport(list) => json!({"mismatches": list.iter().map(|m| json!({
                "kind": m.kind, "source_path": m.source_path, "target_path": m.target_path,
                "source_type": m.source_type, "target_type": m.target_type,
                "detail": m.detail, "severity": m.severity,
            })).collect::<Vec<_>>()}),
            ContractResponse::SchemaMapping(mapping) => json!({"mappings": mapping.fields}),
            ContractResponse::AdapterProgram(program) => serde_json::to_value(program).unwrap_or(Value::Null),
            ContractResponse::TransformedData(data) => json!({"data": data}),
        }
    }
}

#[derive(Deserialize)]
struct WireMismatch {
    kind: MismatchKind,
    #[serde(default)]
    source_path: Option<Path>,
    #[serde(default)]
    target_path: Option<Path>,
    #[serde(default)]
    source_type: Option<Kind>,
    #[serde(default)]
    target_type: Option<Kind>,
    #[serde(default)]
    detail: String,
    #[serde(default = "low")]
    severity: Severity,
}

fn low() -> Severity {
    Severity::Low
}

#[derive(Deserialize)]
struct WireReport {
    mismatches: Vec<WireMismatch>,
}

#[derive(Deserialize)]
struct WireMapping {
    mappings: Vec<FieldMapping>,
}

#[derive(Deserialize)]
struct WireData {
    data: Value,
}

/// Parses and checks `value` against the `kind` contract.
///
/// Mismatch entries come back tagged as semantic findings. Mapping
/// confidences must lie in [0, 1] with unique targets; transformed data
/// must be an object.
pub fn verify_response(kind: ContractKind, value: &Value) -> Result<ContractResponse, ContractViolation> {
    let violation = |message: String| ContractViolation { kind, message };
    let shape = |e: serde_json::Error| violation(e.to_string());
    match kind {
        ContractKind::MismatchReport => {
            let wire: WireReport = serde_json::from_value(value.clone()).map_err(shape)?;
            let mut out = Vec::with_capacity(wire.mismatches.len());
            for (i, m) in wire.mismatches.into_iter().enumerate() {
                if m.source_path.is_none() && m.target_path.is_none() {
                    return Err(violation(format!("mismatches[{i}] names no path")));
                }
                out.push(Mismatch {
                    kind: m.kind,
                    source_path: m.source_path,
                    target_path: m.target_path,
                    source_type: m.source_type,
                    target_type: m.target_type,
                    detail: m.detail,
                    severity: m.severity,
                    origin: Origin::Semantic,
                });
            }
            Ok(ContractResponse::MismatchReport(out))
        }
        ContractKind::SchemaMapping => {
            let wire: WireMapping = serde_json::from_value(value.clone()).map_err(shape)?;
            let mut targets = BTreeSet::new();
            for f in &wire.mappings {
                if !(0.0..=1.0).contains(&f.confidence) {
                    return Err(violation(format!(
                        "confidence {} for `{}` outside [0, 1]",
                        f.confidence, f.target_path
                    )));
                }
                if !targets.insert(&f.target_path) {
                    return Err(violation(format!("`{}` mapped twice", f.target_path)));
                }
            }
            Ok(ContractResponse::SchemaMapping(SchemaMapping::new(wire.mappings)))
        }
        ContractKind::AdapterProgram => {
            let program: AdapterProgram = serde_json::from_value(value.clone()).map_err(shape)?;
            Ok(ContractResponse::AdapterProgram(program))
        }
        ContractKind::TransformedData => {
            let wire: WireData = serde_json::from_value(value.clone()).map_err(shape)?;
            if !wire.data.is_object() {
                return Err(violation("`data` must be an object".into()));
            }
            Ok(ContractResponse::TransformedData(wire.data))
        }
    }
}

/// Token counts for one or more model calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenUsage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl TokenUsage {
    pub fn new(input_tokens: u64, output_tokens: u64) -> Self {
        Self { input_tokens, output_tokens }
    }

    pub fn total(&self) -> u64 {
        self.input_tokens + self.output_tokens
    }
}

impl core::ops::Add for TokenUsage {
    type Output = TokenUsage;

    fn add(self, rhs: TokenUsage) -> TokenUsage {
        TokenUsage::new(self.input_tokens + rhs.input_tokens, self.output_tokens + rhs.output_tokens)
    }
}

impl core::ops::AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: TokenUsage) {
        *self = *self + rhs;
    }
}

impl core::iter::Sum for TokenUsage {
    fn sum<I: Iterator<Item = TokenUsage>>(iter: I) -> Self {
        iter.fold(TokenUsage::default(), |a, b| a + b)
    }
}

/// USD cost with per-million-token prices.
pub fn estimate_cost(usage: TokenUsage, usd_per_million_input: f64, usd_per_million_output: f64) -> f64 {
    usage.input_tokens as f64 * usd_per_million_input / 1e6 + usage.output_tokens as f64 * usd_per_million_output / 1e6
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn mismatch_contract() {
        let v = json!({"mismatches": [{"kind": "unit_mismatch", "source_path": "temperature_celsius",
            "target_path": "measurements.temp_f", "detail": "Celsius to Fahrenheit", "severity": "medium"}]});
        let ContractResponse::MismatchReport(list) = verify_response(ContractKind::MismatchReport, &v).unwrap() else {
            panic!("wrong variant")
        };
        assert_eq!(list[0].origin, Origin::Semantic);
        assert_eq!(list[0].kind, MismatchKind::UnitMismatch);
        let back =
            verify_response(ContractKind::MismatchReport, &ContractResponse::MismatchReport(list.clone()).to_wire())
                .unwrap();
        assert_eq!(back, ContractResponse::MismatchReport(list));
    }

    #[test]
    fn garbage_is_a_violation() {
        for kind in ContractKind::ALL {
            let err = verify_response(kind, &json!("not an object")).unwrap_err();
            assert_eq!(err.kind, kind);
        }
        let no_path = json!({"mismatches": [{"kind": "naming_mismatch", "detail": "", "severity": "low"}]});
        assert!(verify_response(ContractKind::MismatchReport, &no_path).is_err());
        let bad_conf =
            json!({"mappings": [{"source_path": "a", "target_path": "b", "transform": "$", "confidence": 2}]});
        assert!(verify_response(ContractKind::SchemaMapping, &bad_conf).is_err());
        let dup = json!({"mappings": [
            {"source_path": "a", "target_path": "b", "transform": "$", "confidence": 1},
            {"source_path": "c", "target_path": "b", "transform": "$", "confidence": 1}]});
        assert!(verify_response(ContractKind::SchemaMapping, &dup).is_err());
        assert!(verify_response(ContractKind::TransformedData, &json!({"data": [1]})).is_err());
        assert!(verify_response(
            ContractKind::AdapterProgram,
            &json!({"assignments": [{"target": "a", "expr": {"eval": "x"}}]})
        )
        .is_err());
    }

    #[test]
    fn round_trips() {
        let mapping =
            SchemaMapping::new(vec![FieldMapping::new(Some("a".parse().unwrap()), "b".parse().unwrap(), "$", 0.5)]);
        let data = json!({"x": 1});
        for response in [
            ContractResponse::SchemaMapping(mapping),
            ContractResponse::AdapterProgram(AdapterProgram::default().assign("b", crate::adapter::Expr::get("a"))),
            ContractResponse::TransformedData(data),
        ] {
            assert_eq!(verify_response(response.kind(), &response.to_wire()).unwrap(), response);
        }
    }

    #[test]
    fn costs() {
        assert_eq!(estimate_cost(TokenUsage::new(0, 0), 1.0, 1.0), 0.0);
        assert_eq!(estimate_cost(TokenUsage::new(1_000_000, 0), 1.0, 5.0), 1.0);
        // 250k at $2/M is 0.50, 100k at $8/M is 0.80.
        assert!((estimate_cost(TokenUsage::new(250_000, 100_000), 2.0, 8.0) - 1.30).abs() < 1e-12);
    }
}

//! Benchmark scenario fixtures.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::metrics::PathPair;
use crate::mismatch::MismatchKind;
use crate::path::Path;
use crate::schema::Schema;
use crate::validate::validate_instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Rest,
    Iot,
    Graphql,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Rest => "rest",
            Protocol::Iot => "iot",
            Protocol::Graphql => "graphql",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedMismatch {
    #[serde(default)]
    pub source_path: Option<Path>,
    #[serde(default)]
    pub target_path: Option<Path>,
    pub kind: MismatchKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureDoc {
    id: u8,
    name: String,
    #[serde(default)]
    title: Option<String>,
    protocol: Protocol,
    #[serde(default)]
    route: Option<String>,
    source_schema: Value,
    target_schema: Value,
    input: Value,
    golden: Value,
    expected_mismatches: Vec<ExpectedMismatch>,
    #[serde(default)]
    notes: String,
}

/// One self-contained benchmark case.
#[derive(Debug, Clone)]
pub struct ScenarioFixture {
    pub id: u8,
    /// Slug, as in the `NN_slug.json` file name.
    pub name: String,
    /// Display label; defaults to the slug with spaces.
    pub title: String,
    pub protocol: Protocol,
    /// Route path the scenario is served on; `/scenarios/<id>` by default.
    pub route: String,
    pub source_schema: Schema,
    pub target_schema: Schema,
    pub input: Value,
    pub golden: Value,
    pub expected_mismatches: Vec<ExpectedMismatch>,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("fixture {fixture}: {message}")]
pub struct FixtureError {
    pub fixture: String,
    pub message: String,
}

impl ScenarioFixture {
    /// Parses a fixture document and checks that the input validates against
    /// the source schema and the golden output against the target schema.
    pub fn from_value(doc: &Value) -> Result<Self, FixtureError> {
        let label = doc.get("name").and_then(Value::as_str).unwrap_or("<unnamed>").to_string();
        let err = |message: String| FixtureError { fixture: label.clone(), message };
        let d: FixtureDoc = serde_json::from_value(doc.clone()).map_err(|e| err(e.to_string()))?;
        if !(1..=10).contains(&d.id) {
            return Err(err(format!("id {} outside 1..=10", d.id)));
        }
        let source_schema = Schema::from_value(d.source_schema).map_err(|e| err(format!("source_schema: {e}")))?;
        let target_schema = Schema::from_value(d.target_schema).map_err(|e| err(format!("target_schema: {e}")))?;
        let fixture = Self {
            id: d.id,
            route: d.route.unwrap_or_else(|| format!("/scenarios/{}", d.id)),
            title: d.title.unwrap_or_else(|| d.name.replace('_', " ")),
            name: d.name,
            protocol: d.protocol,
            source_schema,
            target_schema,
            input: d.input,
            golden: d.golden,
            expected_mismatches: d.expected_mismatches,
            notes: d.notes,
        };
        fixture.check().map_err(err)?;
        Ok(fixture)
    }

    pub fn parse(text: &str) -> Result<Self, FixtureError> {
        let doc: Value = serde_json::from_str(text)
            .map_err(|e| FixtureError { fixture: "<text>".into(), message: e.to_string() })?;
        Self::from_value(&doc)
    }

    fn check(&self) -> Result<(), String> {
        let describe = |vs: Vec<crate::validate::Violation>| {
            vs.iter().map(|v| format!("{}: {}", v.path, v.reason)).collect::<Vec<_>>().join("; ")
        };
        let bad_input = validate_instance(&self.input, &self.source_schema);
        if !bad_input.is_empty() {
            return Err(format!("input fails the source schema ({})", describe(bad_input)));
        }
        let bad_golden = validate_instance(&self.golden, &self.target_schema);
        if !bad_golden.is_empty() {
            return Err(format!("golden fails the target schema ({})", describe(bad_golden)));
        }
        let (sl, tl) = (self.source_schema.leaf_paths(), self.target_schema.leaf_paths());
        for m in &self.expected_mismatches {
            if m.source_path.is_none() && m.target_path.is_none() {
                return Err("expected mismatch without paths".into());
            }
            if m.source_path.as_ref().is_some_and(|p| !sl.contains(p))
                || m.target_path.as_ref().is_some_and(|p| !tl.contains(p))
            {
                return Err(format!("expected mismatch {:?} names an unknown leaf", m));
            }
        }
        Ok(())
    }

    pub fn expected_pairs(&self) -> BTreeSet<PathPair> {
        self.expected_mismatches.iter().map(|m| (m.source_path.clone(), m.target_path.clone())).collect()
    }

    /// `NN_slug` stem used for file names.
    pub fn file_stem(&self) -> String {
        format!("{:02}_{}", self.id, self.name)
    }
}

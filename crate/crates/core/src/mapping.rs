//! Field-level correspondences between a source and a target schema.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::adapter::{parse_transform, AdapterProgram, Assignment, ParseError};
use crate::path::Path;
use crate::schema::{HashPair, Schema};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMapping {
    /// Absent for targets filled from a constant transform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_path: Option<Path>,
    pub target_path: Path,
    /// Adapter expression in text form; `$` is the source field.
    #[serde(default)]
    pub transform: String,
    pub confidence: f64,
}

impl FieldMapping {
    pub fn new(source_path: Option<Path>, target_path: Path, transform: &str, confidence: f64) -> Self {
        Self { source_path, target_path, transform: transform.to_string(), confidence }
    }

    /// `(source, target)` as rendered text; the unit of voting and of
    /// detection overlap.
    pub fn pair(&self) -> (Option<Path>, Path) {
        (self.source_path.clone(), self.target_path.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SchemaMapping {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<HashPair>,
    pub fields: Vec<FieldMapping>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MappingError {
    #[error("confidence {confidence} for `{target}` is outside [0, 1]")]
    Confidence { target: Path, confidence: f64 },
    #[error("`{0}` is not a leaf of the target schema")]
    UnknownTarget(Path),
    #[error("`{0}` is not a leaf of the source schema")]
    UnknownSource(Path),
    #[error("`{0}` is mapped more than once")]
    DuplicateTarget(Path),
    #[error("transform for `{target}`: {error}")]
    Transform { target: Path, error: ParseError },
}

impl SchemaMapping {
    pub fn new(fields: Vec<FieldMapping>) -> Self {
        Self { pair: None, fields }
    }

    pub fn with_pair(mut self, pair: HashPair) -> Self {
        self.pair = Some(pair);
        self
    }

    /// Every leaf mapped onto itself with confidence 1.
    pub fn identity(schema: &Schema) -> Self {
        Self::new(schema.leaf_paths().into_iter().map(|p| FieldMapping::new(Some(p.clone()), p, "$", 1.0)).collect())
    }

    pub fn min_confidence(&self) -> Option<f64> {
        self.fields.iter().map(|f| f.confidence).reduce(f64::min)
    }

    pub fn targets(&self) -> BTreeSet<&Path> {
        self.fields.iter().map(|f| &f.target_path).collect()
    }

    pub fn find_target(&self, target: &Path) -> Option<&FieldMapping> {
        self.fields.iter().find(|f| &f.target_path == target)
    }

    /// Checks the mapping against its schema pair: confidences in range,
    /// known leaves on both sides, unique targets, parseable transforms.
    pub fn verify(&self, source: &Schema, target: &Schema) -> Result<(), MappingError> {
        let source_leaves = source.leaf_paths();
        let target_leaves = target.leaf_paths();
        let mut seen = BTreeSet::new();
        for f in &self.fields {
            if !(0.0..=1.0).contains(&f.confidence) {
                return Err(MappingError::Confidence { target: f.target_path.clone(), confidence: f.confidence });
            }
            if !target_leaves.contains(&f.target_path) {
                return Err(MappingError::UnknownTarget(f.target_path.clone()));
            }
            if let Some(src) = &f.source_path {
                if !source_leaves.contains(src) {
                    return Err(MappingError::UnknownSource(src.clone()));
                }
            }
            if !seen.insert(&f.target_path) {
                return Err(MappingError::DuplicateTarget(f.target_path.clone()));
            }
            parse_transform(&f.transform, f.source_path.as_ref())
                .map_err(|error| MappingError::Transform { target: f.target_path.clone(), error })?;
        }
        Ok(())
    }

    /// Turns each entry into one `target := transform` assignment, in
    /// mapping order.
    pub fn to_program(&self) -> Result<AdapterProgram, MappingError> {
        let assignments = self
            .fields
            .iter()
            .map(|f| {
                parse_transform(&f.transform, f.source_path.as_ref())
                    .map(|expr| Assignment { target: f.target_path.clone(), expr })
                    .map_err(|error| MappingError::Transform { target: f.target_path.clone(), error })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AdapterProgram::new(assignments))
    }

    pub fn describe(&self) -> String {
        let lines: Vec<String> = self
            .fields
            .iter()
            .map(|f| {
                let src = f.source_path.as_ref().map_or_else(|| "-".to_string(), |p| p.to_string());
                format!("{src} -> {} [{}] ({:.2})", f.target_path, f.transform, f.confidence)
            })
            .collect();
        lines.join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapter::execute_unchecked;
    use alloc::vec;
    use serde_json::json;

    fn schemas() -> (Schema, Schema) {
        (
            Schema::parse(r#"{"type":"object","properties":{"a":{"type":"number"},"b":{"type":"string"}}}"#).unwrap(),
            Schema::parse(r#"{"type":"object","properties":{"x":{"type":"number"},"y":{"type":"object","properties":{"z":{"type":"string"}}}}}"#)
                .unwrap(),
        )
    }

    fn p(s: &str) -> Path {
        s.parse().unwrap()
    }

    #[test]
    fn verify_accepts_good_mapping() {
        let (s, t) = schemas();
        let m = SchemaMapping::new(vec![
            FieldMapping::new(Some(p("a")), p("x"), "celsius_to_fahrenheit($)", 0.9),
            FieldMapping::new(Some(p("b")), p("y.z"), "$", 0.8),
        ]);
        m.verify(&s, &t).unwrap();
        assert_eq!(m.min_confidence(), Some(0.8));
        let out = execute_unchecked(&m.to_program().unwrap(), &json!({"a": 0, "b": "q"})).unwrap();
        assert_eq!(out, json!({"x": 32.0, "y": {"z": "q"}}));
    }

    #[test]
    fn verify_rejects() {
        let (s, t) = schemas();
        let bad_conf = SchemaMapping::new(vec![FieldMapping::new(Some(p("a")), p("x"), "$", 1.5)]);
        assert!(matches!(bad_conf.verify(&s, &t), Err(MappingError::Confidence { .. })));
        let dup = SchemaMapping::new(vec![
            FieldMapping::new(Some(p("a")), p("x"), "$", 0.5),
            FieldMapping::new(Some(p("b")), p("x"), "$", 0.5),
        ]);
        assert_eq!(dup.verify(&s, &t), Err(MappingError::DuplicateTarget(p("x"))));
        let unknown = SchemaMapping::new(vec![FieldMapping::new(Some(p("q")), p("x"), "$", 0.5)]);
        assert_eq!(unknown.verify(&s, &t), Err(MappingError::UnknownSource(p("q"))));
        let target = SchemaMapping::new(vec![FieldMapping::new(Some(p("a")), p("y"), "$", 0.5)]);
        assert_eq!(target.verify(&s, &t), Err(MappingError::UnknownTarget(p("y"))));
        let syntax = SchemaMapping::new(vec![FieldMapping::new(Some(p("a")), p("x"), "round($", 0.5)]);
        assert!(matches!(syntax.verify(&s, &t), Err(MappingError::Transform { .. })));
    }

    #[test]
    fn identity_mapping() {
        let (s, _) = schemas();
        let m = SchemaMapping::identity(&s);
        assert_eq!(m.fields.len(), 2);
        assert!(m.fields.iter().all(|f| f.confidence == 1.0 && f.source_path.as_ref() == Some(&f.target_path)));
        m.verify(&s, &s).unwrap();
    }

    #[test]
    fn constant_targets_have_no_source() {
        let (s, t) = schemas();
        let m = SchemaMapping::new(vec![FieldMapping::new(None, p("y.z"), "\"EUR\"", 1.0)]);
        m.verify(&s, &t).unwrap();
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json, json!({"fields": [{"target_path": "y.z", "transform": "\"EUR\"", "confidence": 1.0}]}));
    }
}

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;
use serde_json::Value;

use super::{builtin_arity, eval::execute_unchecked, AdapterProgram, Expr};
use crate::path::Path;
use crate::schema::Schema;
use crate::validate::validate_instance;

/// Upper bound on expression nodes per program.
pub const MAX_NODES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StaticViolation {
    /// Text form of the offending expression, or the target path.
    pub at: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdapterError {
    #[error("static check failed at `{}`: {}", .0.at, .0.reason)]
    StaticViolation(StaticViolation),
    #[error("trial run failed: {0}")]
    TrialFailure(String),
}

/// An adapter that passed the static checks and a trial run against the
/// target schema. Only [`validate_adapter`] constructs one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidatedAdapter {
    program: AdapterProgram,
}

impl ValidatedAdapter {
    pub fn program(&self) -> &AdapterProgram {
        &self.program
    }

    pub fn into_program(self) -> AdapterProgram {
        self.program
    }
}

fn violation(at: impl Into<String>, reason: impl Into<String>) -> AdapterError {
    AdapterError::StaticViolation(StaticViolation { at: at.into(), reason: reason.into() })
}

/// Whitelist, arity, path existence and size checks.
pub fn check_static(program: &AdapterProgram, source: &Schema, target: &Schema) -> Result<(), AdapterError> {
    let source_leaves = source.leaf_paths();
    let target_leaves = target.leaf_paths();
    let mut seen: BTreeSet<&Path> = BTreeSet::new();
    let mut nodes = 0usize;
    for assignment in &program.assignments {
        let target_text = assignment.target.to_string();
        if !target_leaves.contains(&assignment.target) {
            return Err(violation(target_text, "target is not a leaf of the target schema"));
        }
        if !seen.insert(&assignment.target) {
            return Err(violation(target_text, "target assigned more than once"));
        }
        let mut failure: Option<AdapterError> = None;
        assignment.expr.visit(&mut |node| {
            nodes += 1;
            if failure.is_some() {
                return;
            }
            match node {
                Expr::Get(path) if !source_leaves.contains(path) => {
                    failure = Some(violation(node.to_string(), "path is not a leaf of the source schema"));
                }
                Expr::Call { func, args } => match builtin_arity(func) {
                    None => {
                        failure = Some(violation(node.to_string(), format!("`{func}` is not a whitelisted function")))
                    }
                    Some(arity) if !arity.accepts(args.len()) => {
                        failure =
                            Some(violation(node.to_string(), format!("`{func}` called with {} arguments", args.len())))
                    }
                    Some(_) => {}
                },
                Expr::Const(Value::Array(_) | Value::Object(_)) => {
                    failure = Some(violation(node.to_string(), "constants must be scalars"));
                }
                _ => {}
            }
        });
        if let Some(err) = failure {
            return Err(err);
        }
        if nodes > MAX_NODES {
            return Err(violation(target_text, format!("program exceeds {MAX_NODES} expression nodes")));
        }
    }
    Ok(())
}

/// Static checks, then a trial run on `sample` whose output must validate
/// against `target`.
pub fn validate_adapter(
    program: AdapterProgram,
    source: &Schema,
    target: &Schema,
    sample: &Value,
) -> Result<ValidatedAdapter, AdapterError> {
    check_static(&program, source, target)?;
    let output = execute_unchecked(&program, sample).map_err(|e| AdapterError::TrialFailure(e.to_string()))?;
    let violations = validate_instance(&output, target);
    if !violations.is_empty() {
        let listed: Vec<String> = violations.iter().map(|v| format!("{}: {}", v.path, v.reason)).collect();
        return Err(AdapterError::TrialFailure(format!("output fails the target schema ({})", listed.join("; "))));
    }
    Ok(ValidatedAdapter { program })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapter::{execute_adapter, parse_expr};
    use serde_json::json;

    fn source() -> Schema {
        Schema::parse(
            r#"{"type":"object","properties":{"city":{"type":"string"},"n":{"type":"integer"}},"required":["city","n"]}"#,
        )
        .unwrap()
    }

    fn target() -> Schema {
        Schema::parse(
            r#"{"type":"object","properties":{"location":{"type":"object","properties":{"name":{"type":"string"}},"required":["name"]},"count":{"type":"integer"}},"required":["location","count"]}"#,
        )
        .unwrap()
    }

    fn program(pairs: &[(&str, &str)]) -> AdapterProgram {
        pairs.iter().fold(AdapterProgram::default(), |p, (t, e)| p.assign(t, parse_expr(e).unwrap()))
    }

    #[test]
    fn valid_program_passes() {
        let sample = json!({"city": "Oslo", "n": 3});
        let v = validate_adapter(
            program(&[("location.name", "$city"), ("count", "$n + 1")]),
            &source(),
            &target(),
            &sample,
        )
        .unwrap();
        assert_eq!(execute_adapter(&v, &sample).unwrap(), json!({"location": {"name": "Oslo"}, "count": 4}));
    }

    #[test]
    fn unknown_source_path_is_static() {
        let err =
            validate_adapter(program(&[("location.name", "$town")]), &source(), &target(), &json!({})).unwrap_err();
        assert_eq!(
            err,
            AdapterError::StaticViolation(StaticViolation {
                at: "$town".into(),
                reason: "path is not a leaf of the source schema".into()
            })
        );
    }

    #[test]
    fn non_whitelisted_and_arity() {
        let err = check_static(&program(&[("count", "eval($city)")]), &source(), &target()).unwrap_err();
        assert!(matches!(err, AdapterError::StaticViolation(ref v) if v.at == "eval($city)"));
        let err = check_static(&program(&[("count", "round($n)")]), &source(), &target()).unwrap_err();
        assert!(matches!(err, AdapterError::StaticViolation(_)));
        let err = check_static(&program(&[("nowhere", "$n")]), &source(), &target()).unwrap_err();
        assert!(matches!(err, AdapterError::StaticViolation(ref v) if v.at == "nowhere"));
        let err = check_static(&program(&[("count", "$n"), ("count", "$n")]), &source(), &target()).unwrap_err();
        assert!(matches!(err, AdapterError::StaticViolation(_)));
    }

    #[test]
    fn string_into_integer_is_trial_failure() {
        let err = validate_adapter(
            program(&[("location.name", "$city"), ("count", "$city")]),
            &source(),
            &target(),
            &json!({"city": "Oslo", "n": 3}),
        )
        .unwrap_err();
        assert!(matches!(err, AdapterError::TrialFailure(ref m) if m.contains("count")));
    }

    #[test]
    fn runtime_error_is_trial_failure() {
        let err = validate_adapter(
            program(&[("location.name", "$city"), ("count", "$n / 0")]),
            &source(),
            &target(),
            &json!({"city": "Oslo", "n": 3}),
        )
        .unwrap_err();
        assert!(matches!(err, AdapterError::TrialFailure(_)));
    }
}

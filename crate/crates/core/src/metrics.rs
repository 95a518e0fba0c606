//! Output comparison and the evaluation metrics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;
use serde_json::Value;

use crate::mismatch::MismatchReport;
use crate::path::Path;

/// Float tolerance for pass@1 and value accuracy.
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Differences listed by [`compare_outputs`].
pub const MAX_DIFFS: usize = 20;

fn numbers_equal(a: &serde_json::Number, b: &serde_json::Number, epsilon: f64) -> bool {
    if let (Some(x), Some(y)) = (a.as_i64(), b.as_i64()) {
        if epsilon == 0.0 || x == y {
            return x == y;
        }
    }
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x == y || libm::fabs(x - y) <= epsilon,
        _ => false,
    }
}

/// Recursive equality; numbers match across integer/float form when they
/// differ by at most `epsilon`.
pub fn json_equal(a: &Value, b: &Value, epsilon: f64) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => numbers_equal(x, y, epsilon),
        (Value::Array(xs), Value::Array(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| json_equal(x, y, epsilon))
        }
        (Value::Object(xs), Value::Object(ys)) => {
            xs.len() == ys.len() && xs.iter().all(|(k, x)| ys.get(k).is_some_and(|y| json_equal(x, y, epsilon)))
        }
        _ => a == b,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Difference {
    /// Rendered location; `$` for the document root, `[i]` for array slots.
    pub path: String,
    pub actual: Option<Value>,
    pub expected: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub pass: bool,
    /// First [`MAX_DIFFS`] differences in document order.
    pub diff: Vec<Difference>,
}

fn join(at: &str, key: &str) -> String {
    if at == "$" {
        key.into()
    } else {
        alloc::format!("{at}.{key}")
    }
}

fn collect_diffs(a: &Value, b: &Value, epsilon: f64, at: &str, out: &mut Vec<Difference>) {
    if out.len() >= MAX_DIFFS {
        return;
    }
    match (a, b) {
        (Value::Object(xs), Value::Object(ys)) => {
            let keys: BTreeSet<&String> = xs.keys().chain(ys.keys()).collect();
            for k in keys {
                let here = join(at, k);
                match (xs.get(k), ys.get(k)) {
                    (Some(x), Some(y)) => collect_diffs(x, y, epsilon, &here, out),
                    (x, y) => out.push(Difference { path: here, actual: x.cloned(), expected: y.cloned() }),
                }
                if out.len() >= MAX_DIFFS {
                    return;
                }
            }
        }
        (Value::Array(xs), Value::Array(ys)) if xs.len() == ys.len() => {
            for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
                collect_diffs(x, y, epsilon, &alloc::format!("{at}[{i}]"), out);
            }
        }
        _ if json_equal(a, b, epsilon) => {}
        _ => out.push(Difference { path: at.into(), actual: Some(a.clone()), expected: Some(b.clone()) }),
    }
}

/// pass@1 comparison against a golden document.
pub fn compare_outputs(actual: &Value, golden: &Value, epsilon: f64) -> Comparison {
    let mut diff = Vec::new();
    collect_diffs(actual, golden, epsilon, "$", &mut diff);
    Comparison { pass: json_equal(actual, golden, epsilon), diff }
}

/// Leaf values of a JSON document by path. Arrays are leaves; empty
/// objects contribute nothing.
pub fn instance_leaves(value: &Value) -> BTreeMap<Path, &Value> {
    fn walk<'a>(value: &'a Value, at: &Path, out: &mut BTreeMap<Path, &'a Value>) {
        match value {
            Value::Object(map) => {
                for (k, v) in map {
                    walk(v, &at.child(k), out);
                }
            }
            _ if at.is_empty() => {}
            _ => {
                out.insert(at.clone(), value);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(value, &Path::root(), &mut out);
    out
}

/// Harmonic mean of leaf-key precision and recall; two empty documents
/// score 1.0.
pub fn field_f1(actual: &Value, golden: &Value) -> f64 {
    let a: BTreeSet<Path> = instance_leaves(actual).into_keys().collect();
    let e: BTreeSet<Path> = instance_leaves(golden).into_keys().collect();
    if a.is_empty() && e.is_empty() {
        return 1.0;
    }
    let shared = a.intersection(&e).count() as f64;
    if shared == 0.0 {
        return 0.0;
    }
    let precision = shared / a.len() as f64;
    let recall = shared / e.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Fraction of shared leaves whose values match; 1.0 with no shared leaves.
pub fn value_accuracy(actual: &Value, golden: &Value, epsilon: f64) -> f64 {
    let a = instance_leaves(actual);
    let e = instance_leaves(golden);
    let shared: Vec<(&Value, &Value)> = a.iter().filter_map(|(p, x)| e.get(p).map(|y| (*x, *y))).collect();
    if shared.is_empty() {
        return 1.0;
    }
    let hits = shared.iter().filter(|(x, y)| json_equal(x, y, epsilon)).count();
    hits as f64 / shared.len() as f64
}

pub type PathPair = (Option<Path>, Option<Path>);

/// Precision and recall on `(source_path, target_path)` pairs, kinds
/// ignored. Empty observed gives precision 1.0; empty expected gives
/// recall 1.0.
pub fn detection_prf(observed: &MismatchReport, expected: &BTreeSet<PathPair>) -> (f64, f64) {
    let seen = observed.path_pairs();
    let hits = seen.intersection(expected).count() as f64;
    let precision = if seen.is_empty() { 1.0 } else { hits / seen.len() as f64 };
    let recall = if expected.is_empty() { 1.0 } else { hits / expected.len() as f64 };
    (precision, recall)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Nearest-rank percentile: the smallest value with at least `p` percent of
/// the sample at or below it. Zero for an empty sample.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = libm::ceil(p / 100.0 * sorted.len() as f64) as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

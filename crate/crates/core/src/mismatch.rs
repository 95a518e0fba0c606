//! Mismatch reports and the deterministic structural detector.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::path::Path;
use crate::schema::{HashPair, Kind, Schema, SchemaNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchKind {
    FieldMissing,
    FieldExtra,
    TypeMismatch,
    NestingMismatch,
    CardinalityMismatch,
    NamingMismatch,
    UnitMismatch,
}

impl MismatchKind {
    pub fn is_semantic(self) -> bool {
        matches!(self, MismatchKind::NamingMismatch | MismatchKind::UnitMismatch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Structural,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub kind: MismatchKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_path: Option<Path>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_path: Option<Path>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_type: Option<Kind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_type: Option<Kind>,
    #[serde(default)]
    pub detail: String,
    pub severity: Severity,
    pub origin: Origin,
}

impl Mismatch {
    pub fn key(&self) -> (MismatchKind, Option<&Path>, Option<&Path>) {
        (self.kind, self.source_path.as_ref(), self.target_path.as_ref())
    }

    pub fn path_pair(&self) -> (Option<&Path>, Option<&Path>) {
        (self.source_path.as_ref(), self.target_path.as_ref())
    }

    /// At least one path, and naming/unit kinds only from the semantic side.
    pub fn is_well_formed(&self) -> bool {
        (self.source_path.is_some() || self.target_path.is_some())
            && (!self.kind.is_semantic() || self.origin == Origin::Semantic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchReport {
    pub pair: HashPair,
    pub mismatches: Vec<Mismatch>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("reports describe different schema pairs")]
pub struct PairMismatch;

impl MismatchReport {
    /// Builds a report, keeping the first entry for each
    /// `(kind, source_path, target_path)`.
    pub fn new(pair: HashPair, mismatches: Vec<Mismatch>) -> Self {
        let mut seen = BTreeSet::new();
        let mismatches = mismatches
            .into_iter()
            .filter(|m| seen.insert((m.kind, m.source_path.clone(), m.target_path.clone())))
            .collect();
        Self { pair, mismatches }
    }

    pub fn empty(pair: HashPair) -> Self {
        Self { pair, mismatches: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn len(&self) -> usize {
        self.mismatches.len()
    }

    pub fn path_pairs(&self) -> BTreeSet<(Option<Path>, Option<Path>)> {
        self.mismatches.iter().map(|m| (m.source_path.clone(), m.target_path.clone())).collect()
    }
}

/// Coarse structural shape used for severity: a scalar, an array whose
/// innermost items are of some kind, or an object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Scalar(Kind),
    ArrayOf(Kind),
    Object,
}

impl Shape {
    pub fn of(node: &SchemaNode) -> Self {
        match node.kind {
            Kind::Object => Shape::Object,
            Kind::Array => match node.innermost().kind {
                Kind::Object => Shape::ArrayOf(Kind::Object),
                k => Shape::ArrayOf(k),
            },
            k => Shape::Scalar(k),
        }
    }
}

fn scalar_distance(a: Kind, b: Kind) -> Severity {
    use Kind::*;
    match (a, b) {
        _ if a == b => Severity::Low,
        (Integer, Number) | (Number, Integer) => Severity::Low,
        (String, Number | Integer | Boolean) | (Number | Integer | Boolean, String) => Severity::Medium,
        _ => Severity::High,
    }
}

/// Low within the numeric family, medium for coercible cross-family pairs
/// (string↔number/integer/boolean, scalar↔array of the same scalar), high
/// for anything involving an object against a non-object.
pub fn classify_severity(source: Shape, target: Shape) -> Severity {
    match (source, target) {
        (Shape::Object, Shape::Object) => Severity::Low,
        (Shape::Object, _) | (_, Shape::Object) => Severity::High,
        (Shape::ArrayOf(Kind::Object), _) | (_, Shape::ArrayOf(Kind::Object)) => {
            if source == target {
                Severity::Low
            } else {
                Severity::High
            }
        }
        (Shape::Scalar(a), Shape::Scalar(b)) | (Shape::ArrayOf(a), Shape::ArrayOf(b)) => scalar_distance(a, b),
        (Shape::Scalar(a), Shape::ArrayOf(b)) | (Shape::ArrayOf(a), Shape::Scalar(b)) => {
            if scalar_distance(a, b) == Severity::Low {
                Severity::Medium
            } else {
                Severity::High
            }
        }
    }
}

struct Leaf<'a> {
    path: Path,
    node: &'a SchemaNode,
}

impl Leaf<'_> {
    fn kind(&self) -> Kind {
        self.node.kind
    }

    fn shape(&self) -> Shape {
        if self.path.has_items() {
            Shape::ArrayOf(self.node.kind)
        } else {
            Shape::Scalar(self.node.kind)
        }
    }
}

fn leaves(schema: &Schema) -> Vec<Leaf<'_>> {
    schema.leaf_paths().into_iter().filter_map(|path| schema.node_at(&path).map(|node| Leaf { path, node })).collect()
}

fn mismatch(
    kind: MismatchKind,
    s: Option<&Leaf<'_>>,
    t: Option<&Leaf<'_>>,
    detail: String,
    severity: Severity,
) -> Mismatch {
    Mismatch {
        kind,
        source_path: s.map(|l| l.path.clone()),
        target_path: t.map(|l| l.path.clone()),
        source_type: s.map(Leaf::kind),
        target_type: t.map(Leaf::kind),
        detail,
        severity,
        origin: Origin::Structural,
    }
}

fn compare_pair(s: &Leaf<'_>, t: &Leaf<'_>, out: &mut Vec<Mismatch>) {
    if s.path.items_count() != t.path.items_count() {
        let describe = |l: &Leaf<'_>| if l.path.has_items() { "array" } else { "scalar" };
        out.push(mismatch(
            MismatchKind::CardinalityMismatch,
            Some(s),
            Some(t),
            format!("{}→{}", describe(s), describe(t)),
            classify_severity(s.shape(), t.shape()),
        ));
    } else if s.kind() != t.kind() {
        out.push(mismatch(
            MismatchKind::TypeMismatch,
            Some(s),
            Some(t),
            format!("{}→{}", s.kind(), t.kind()),
            classify_severity(s.shape(), t.shape()),
        ));
    }
}

/// Walks both schemas' leaves and reports structural differences.
///
/// Leaves pair first by identical path (array markers ignored), then by
/// identical leaf name at a different depth, which is a nesting mismatch.
/// Within one leaf name the unpaired sources and targets are zipped in path
/// order, so swapping the schemas swaps missing and extra exactly.
pub fn detect_structural(source: &Schema, target: &Schema) -> MismatchReport {
    let pair = (source.hash(), target.hash());
    let src = leaves(source);
    let tgt = leaves(target);
    let mut out = Vec::new();

    let tgt_by_key: BTreeMap<Path, usize> = tgt.iter().enumerate().map(|(i, l)| (l.path.without_items(), i)).collect();
    let mut src_used = alloc::vec![false; src.len()];
    let mut tgt_used = alloc::vec![false; tgt.len()];
    for (i, s) in src.iter().enumerate() {
        if let Some(&j) = tgt_by_key.get(&s.path.without_items()) {
            src_used[i] = true;
            tgt_used[j] = true;
            compare_pair(s, &tgt[j], &mut out);
        }
    }

    let mut by_name: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, s) in src.iter().enumerate().filter(|(i, _)| !src_used[*i]) {
        if let Some(name) = s.path.leaf_name() {
            by_name.entry(name).or_default().0.push(i);
        }
    }
    for (j, t) in tgt.iter().enumerate().filter(|(j, _)| !tgt_used[*j]) {
        if let Some(name) = t.path.leaf_name() {
            by_name.entry(name).or_default().1.push(j);
        }
    }
    for (ss, ts) in by_name.values() {
        for (&i, &j) in ss.iter().zip(ts) {
            src_used[i] = true;
            tgt_used[j] = true;
            let (s, t) = (&src[i], &tgt[j]);
            out.push(mismatch(
                MismatchKind::NestingMismatch,
                Some(s),
                Some(t),
                format!("{}→{}", s.path, t.path),
                Severity::Low,
            ));
            compare_pair(s, t, &mut out);
        }
    }

    for (i, s) in src.iter().enumerate().filter(|(i, _)| !src_used[*i]) {
        let _ = i;
        out.push(mismatch(
            MismatchKind::FieldMissing,
            Some(s),
            None,
            format!("{} has no counterpart", s.path),
            Severity::Low,
        ));
    }
    for (j, t) in tgt.iter().enumerate().filter(|(j, _)| !tgt_used[*j]) {
        let _ = j;
        let severity = if target.is_required(&t.path) { Severity::Medium } else { Severity::Low };
        out.push(mismatch(MismatchKind::FieldExtra, None, Some(t), format!("{} has no source", t.path), severity));
    }
    MismatchReport::new(pair, out)
}

/// Unions the two reports; where both carry an entry for the same
/// `(source_path, target_path)`, only the semantic entries survive.
pub fn merge_reports(structural: &MismatchReport, semantic: &MismatchReport) -> Result<MismatchReport, PairMismatch> {
    if structural.pair != semantic.pair {
        return Err(PairMismatch);
    }
    let covered: BTreeSet<(Option<&Path>, Option<&Path>)> =
        semantic.mismatches.iter().map(Mismatch::path_pair).collect();
    let merged = structural
        .mismatches
        .iter()
        .filter(|m| !covered.contains(&m.path_pair()))
        .chain(semantic.mismatches.iter())
        .cloned()
        .collect();
    Ok(MismatchReport::new(structural.pair, merged))
}

//! Majority voting over independently generated mappings.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::mapping::{FieldMapping, SchemaMapping};
use crate::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VoteError {
    #[error("only {valid} of {issued} ensemble members returned a usable mapping")]
    TooFewVotes { valid: usize, issued: usize },
    #[error("no field pair reached a majority")]
    NoMajority,
}

/// Valid responses required out of `issued` calls: ⌈(n+1)/2⌉.
pub fn quorum(issued: usize) -> usize {
    issued / 2 + 1
}

type PairKey = (Option<Path>, Path);

struct Tally<'a> {
    votes: usize,
    confidences: Vec<f64>,
    best: &'a FieldMapping,
}

impl Tally<'_> {
    /// Summed in sorted order so the result ignores vote order.
    fn mean_confidence(&self) -> f64 {
        let mut sorted = self.confidences.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.iter().sum::<f64>() / self.votes as f64
    }
}

/// Keeps the `(source, target)` pairs present in more than `issued / 2` of
/// the `votes`.
///
/// A source that survives with several targets keeps the one with the most
/// votes, then the higher mean confidence, then the smaller target path;
/// the same rule resolves a target claimed by several sources. Each
/// surviving entry takes its transform and confidence from its
/// highest-confidence supporting vote, ties going to the smaller transform
/// text. The result is ordered by target path and does not depend on the
/// order of `votes`.
pub fn majority_vote(votes: &[SchemaMapping], issued: usize) -> Result<SchemaMapping, VoteError> {
    if issued == 0 || votes.len() < quorum(issued) {
        return Err(VoteError::TooFewVotes { valid: votes.len(), issued });
    }
    let mut tallies: BTreeMap<PairKey, Tally<'_>> = BTreeMap::new();
    for vote in votes {
        let mut counted: BTreeSet<PairKey> = BTreeSet::new();
        for field in &vote.fields {
            let key = field.pair();
            if !counted.insert(key.clone()) {
                continue;
            }
            tallies
                .entry(key)
                .and_modify(|t| {
                    t.votes += 1;
                    t.confidences.push(field.confidence);
                    if field
                        .confidence
                        .total_cmp(&t.best.confidence)
                        .then_with(|| t.best.transform.cmp(&field.transform))
                        .is_gt()
                    {
                        t.best = field;
                    }
                })
                .or_insert(Tally { votes: 1, confidences: alloc::vec![field.confidence], best: field });
        }
    }

    let mut survivors: Vec<(&PairKey, &Tally<'_>)> = tallies.iter().filter(|(_, t)| t.votes * 2 > issued).collect();
    // Strongest first, so the first survivor seen for a source or target wins.
    survivors.sort_by(|(ka, a), (kb, b)| {
        b.votes
            .cmp(&a.votes)
            .then_with(|| b.mean_confidence().total_cmp(&a.mean_confidence()))
            .then_with(|| ka.1.cmp(&kb.1))
            .then_with(|| ka.0.cmp(&kb.0))
    });
    let mut used_sources: BTreeSet<&Path> = BTreeSet::new();
    let mut used_targets: BTreeSet<&Path> = BTreeSet::new();
    let mut fields = Vec::new();
    for ((source, target), tally) in survivors {
        if used_targets.contains(target) || source.as_ref().is_some_and(|s| used_sources.contains(s)) {
            continue;
        }
        used_targets.insert(target);
        if let Some(s) = source {
            used_sources.insert(s);
        }
        fields.push(FieldMapping {
            source_path: source.clone(),
            target_path: target.clone(),
            transform: tally.best.transform.clone(),
            confidence: tally.best.confidence,
        });
    }
    if fields.is_empty() {
        return Err(VoteError::NoMajority);
    }
    fields.sort_by(|a, b| a.target_path.cmp(&b.target_path));
    Ok(SchemaMapping { pair: votes.iter().find_map(|v| v.pair), fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::{String, ToString};
    use alloc::vec;
    use proptest::prelude::*;

    fn m(pairs: &[(&str, &str, f64)]) -> SchemaMapping {
        SchemaMapping::new(
            pairs
                .iter()
                .map(|(s, t, c)| FieldMapping::new(Some(s.parse().unwrap()), t.parse().unwrap(), "$", *c))
                .collect(),
        )
    }

    fn pairs(mapping: &SchemaMapping) -> Vec<(String, String)> {
        mapping
            .fields
            .iter()
            .map(|f| (f.source_path.as_ref().unwrap().to_string(), f.target_path.to_string()))
            .collect()
    }

    #[test]
    fn majority_of_three() {
        let votes = [
            m(&[("a", "x", 0.9), ("b", "y", 0.8)]),
            m(&[("a", "x", 0.9), ("b", "z", 0.8)]),
            m(&[("a", "x", 0.9), ("b", "y", 0.7)]),
        ];
        let out = majority_vote(&votes, 3).unwrap();
        assert_eq!(pairs(&out), vec![("a".into(), "x".into()), ("b".into(), "y".into())]);
        assert_eq!(out.find_target(&"y".parse().unwrap()).unwrap().confidence, 0.8);
    }

    #[test]
    fn single_vote_is_verbatim() {
        let vote = m(&[("a", "x", 0.5), ("b", "y", 0.6)]);
        assert_eq!(majority_vote(core::slice::from_ref(&vote), 1).unwrap().fields, vote.fields);
    }

    #[test]
    fn quorum_and_empty() {
        assert_eq!(quorum(3), 2);
        assert_eq!(quorum(5), 3);
        assert_eq!(majority_vote(&[], 3), Err(VoteError::TooFewVotes { valid: 0, issued: 3 }));
        let split = [m(&[("a", "x", 0.9)]), m(&[("a", "y", 0.9)]), m(&[("a", "z", 0.9)])];
        assert_eq!(majority_vote(&split, 3), Err(VoteError::NoMajority));
    }

    #[test]
    fn source_tie_breaks_on_confidence_then_target() {
        // Both pairs reach three of five votes; a→y has the higher mean
        // confidence.
        let votes = [
            m(&[("a", "x", 0.9)]),
            m(&[("a", "x", 0.9)]),
            m(&[("a", "x", 0.9), ("a", "y", 0.95)]),
            m(&[("a", "y", 0.95)]),
            m(&[("a", "y", 0.95)]),
        ];
        let out = majority_vote(&votes, 5).unwrap();
        assert_eq!(pairs(&out), vec![("a".into(), "y".into())]);
    }

    proptest! {
        #[test]
        fn invariant_under_permutation(
            raw in proptest::collection::vec(proptest::collection::vec((0u8..3, 0u8..3, 0u8..4), 1..4), 3..=5),
            shift in 0usize..5,
        ) {
            let names = ["a", "b", "c"];
            let targets = ["x", "y", "z"];
            let votes: Vec<SchemaMapping> = raw
                .iter()
                .map(|fields| {
                    let mut seen = BTreeSet::new();
                    SchemaMapping::new(
                        fields
                            .iter()
                            .filter(|(_, t, _)| seen.insert(*t))
                            .map(|(s, t, c)| FieldMapping::new(
                                Some(names[*s as usize].parse().unwrap()),
                                targets[*t as usize].parse().unwrap(),
                                "$",
                                f64::from(*c) / 4.0,
                            ))
                            .collect(),
                    )
                })
                .collect();
            let n = votes.len();
            let mut rotated = votes.clone();
            rotated.rotate_left(shift % n);
            rotated.reverse();
            prop_assert_eq!(majority_vote(&votes, n), majority_vote(&rotated, n));
        }
    }

    #[test]
    fn best_transform_tie_uses_text_order() {
        let mut a = m(&[("a", "x", 0.9)]);
        a.fields[0].transform = "to_float($)".into();
        let mut b = m(&[("a", "x", 0.9)]);
        b.fields[0].transform = "$".into();
        let out = majority_vote(&[a.clone(), b, a], 3).unwrap();
        assert_eq!(out.fields[0].transform, "$");
    }
}

//! The scenario goldens come from an independent script; these tests check
//! that the adapter language and the fallback reproduce them.

mod common;

use serde_json::Value;

use schemabridge::core::adapter::{execute_adapter, validate_adapter};
use schemabridge::core::fallback::fallback_transform;
use schemabridge::core::metrics::{compare_outputs, detection_prf};
use schemabridge::core::mismatch::detect_structural;
use schemabridge::core::SchemaMapping;

use common::*;

fn canned_mapping(stem: &str) -> SchemaMapping {
    let text = std::fs::read_to_string(repo_root().join(format!("fixtures/mock/{stem}.json"))).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    SchemaMapping::new(serde_json::from_value(doc["mapping"]["mappings"].clone()).unwrap())
}

#[test]
fn ten_scenarios_with_expected_titles() {
    let titles: Vec<String> = scenarios().iter().map(|f| f.title.clone()).collect();
    assert_eq!(
        titles,
        [
            "Weather version",
            "Sensor analytics",
            "Stock casing",
            "Multi-sensor",
            "Date bridging",
            "Nested to flat",
            "Metric normalization",
            "Missing fields",
            "Array single",
            "Combined complex"
        ]
    );
}

#[test]
fn canned_mappings_reproduce_the_goldens() {
    for f in scenarios() {
        let mapping = canned_mapping(&f.file_stem());
        mapping.verify(&f.source_schema, &f.target_schema).unwrap();
        let adapter = validate_adapter(mapping.to_program().unwrap(), &f.source_schema, &f.target_schema, &f.input)
            .unwrap_or_else(|e| panic!("{}: {e}", f.name));
        let out = execute_adapter(&adapter, &f.input).unwrap();
        let cmp = compare_outputs(&out, &f.golden, 0.01);
        assert!(cmp.pass, "{}: {:?}", f.name, cmp.diff);
    }
}

#[test]
fn walkthrough_golden_is_the_published_one() {
    let f = &scenarios()[0];
    assert_eq!(
        f.golden,
        serde_json::json!({"location": {"name": "Amsterdam"},
                           "measurements": {"temp_f": 65.3, "humidity": 72.0, "wind_mph": 9.51},
                           "recorded_at": 1782225000})
    );
}

#[test]
fn fallback_alone_solves_the_rename_unit_and_reshape_scenarios() {
    // 2 rename+unit, 3 casing, 5 ISO to epoch, 6 flattening,
    // 8 optional fields, 9 cardinality.
    let expected_exact = [2, 3, 5, 6, 8, 9];
    for f in scenarios() {
        let out = fallback_transform(&f.input, &f.source_schema, &f.target_schema);
        let pass = compare_outputs(&out, &f.golden, 0.01).pass;
        assert_eq!(pass, expected_exact.contains(&f.id), "{}: {out}", f.name);
    }
}

#[test]
fn structural_detection_finds_the_type_and_cardinality_changes() {
    for id in [5u8, 9] {
        let f = scenarios().into_iter().find(|f| f.id == id).unwrap();
        let report = detect_structural(&f.source_schema, &f.target_schema);
        let (_, recall) = detection_prf(&report, &f.expected_pairs());
        assert_eq!(recall, 1.0, "{}", f.name);
    }
}

mod common;

use std::process::Command;

use schemabridge::bench::{
    render_json, render_report, run_benchmark, thousands, BenchConfig, BenchmarkReport, RunResult, Summary,
};
use schemabridge::core::{Strategy, TokenUsage};
use schemabridge::llm::mock::MockMode;
use schemabridge::safeguard::Tier;

use common::*;

fn result(scenario: u8, strategy: Strategy, safeguards: bool, pass: bool, latency_ms: f64, tier: Tier) -> RunResult {
    RunResult {
        scenario,
        strategy,
        safeguards,
        run: 1,
        pass,
        field_f1: if pass { 1.0 } else { 0.5 },
        value_accuracy: if pass { 1.0 } else { 0.0 },
        detection_precision: 1.0,
        detection_recall: 1.0,
        detect_ms: 0.0,
        resolve_ms: latency_ms,
        safeguard_ms: 0.0,
        latency_ms,
        llm_calls: 1,
        tokens: TokenUsage { input_tokens: 600, output_tokens: 400 },
        cost: 0.25,
        tier_used: tier,
        differences: Vec::new(),
    }
}

#[test]
fn summaries_follow_the_hand_computed_values() {
    let runs = [
        result(1, Strategy::Direct, true, true, 10.0, Tier::None),
        result(1, Strategy::Direct, true, false, 40.0, Tier::Fallback),
        result(2, Strategy::Direct, true, true, 20.0, Tier::Ensemble),
        result(2, Strategy::Direct, true, true, 30.0, Tier::None),
    ];
    let s = Summary::of(&runs);
    assert_eq!(s.runs, 4);
    assert_eq!(s.pass_at_1, 0.75);
    assert_eq!(s.field_f1, 0.875);
    assert_eq!(s.mean_latency_ms, 25.0);
    // Nearest rank: ceil(0.95 * 4) = 4th smallest.
    assert_eq!(s.p95_latency_ms, 40.0);
    assert_eq!(s.tokens, 4000);
    assert_eq!(s.cost, 1.0);
    assert_eq!(s.ensemble_rate, 0.5);
    assert_eq!(s.fallback_rate, 0.25);
}

#[test]
fn report_aggregates_lift_and_per_scenario_columns() {
    let fixtures = scenarios();
    let runs = vec![
        result(1, Strategy::Direct, true, true, 1.0, Tier::None),
        result(1, Strategy::Direct, false, false, 1.0, Tier::None),
        result(1, Strategy::Codegen, true, true, 1.0, Tier::None),
        result(1, Strategy::Codegen, false, true, 1.0, Tier::None),
    ];
    let r = BenchmarkReport::from_results("m", "p", 1, &fixtures[..1], runs);
    assert_eq!(r.scenarios[0].direct, Some(0.5));
    assert_eq!(r.scenarios[0].codegen, Some(1.0));
    assert_eq!(r.lift_for(Strategy::Direct), Some(1.0));
    assert_eq!(r.lift_for(Strategy::Codegen), Some(0.0));
    assert_eq!(r.total_tokens, 4000);
    assert_eq!(r.combinations.len(), 4);
}

#[test]
fn token_totals_are_shown_in_thousands() {
    assert_eq!(thousands(0), "0K");
    assert_eq!(thousands(1_499), "1K");
    assert_eq!(thousands(1_234_000), "1,234K");
    assert_eq!(thousands(12_345_678), "12,346K");
}

#[tokio::test]
async fn single_strategy_runs_leave_the_other_column_blank() {
    let config =
        BenchConfig { strategies: vec![Strategy::Codegen], safeguards: vec![true], runs: 1, ..BenchConfig::default() };
    let report = run_benchmark(&config, &scenarios(), Some(client(mock(MockMode::Faithful, 0)))).await;
    assert_eq!(report.results.len(), 10);
    assert!(report.scenarios.iter().all(|s| s.direct.is_none() && s.codegen == Some(1.0)));
    assert!(report.lift.is_empty());
    let text = render_report(std::slice::from_ref(&report));
    assert!(text.contains("Weather version         -      1.00"), "{text}");
    let json = render_json(&[report]);
    let back: Vec<BenchmarkReport> = serde_json::from_value(json["reports"].clone()).unwrap();
    assert_eq!(back[0].results.len(), 10);
}

#[tokio::test]
async fn parallel_and_sequential_runs_agree() {
    let fixtures = scenarios();
    let base = BenchConfig { runs: 1, ..BenchConfig::default() };
    let seq = run_benchmark(&base, &fixtures, Some(client(mock(MockMode::Faithful, 0)))).await;
    let par =
        run_benchmark(&BenchConfig { parallel: true, ..base }, &fixtures, Some(client(mock(MockMode::Faithful, 0))))
            .await;
    let key = |r: &RunResult| (r.scenario, r.strategy, r.safeguards, r.pass, r.llm_calls, r.tokens);
    let mut a: Vec<_> = seq.results.iter().map(key).collect();
    let mut b: Vec<_> = par.results.iter().map(key).collect();
    a.sort_by_key(|k| (k.0, k.1, k.2));
    b.sort_by_key(|k| (k.0, k.1, k.2));
    assert_eq!(a, b);
}

#[test]
fn cli_bench_prints_all_tables_and_writes_json() {
    let out = std::env::temp_dir().join(format!("schemabridge-bench-{}.json", std::process::id()));
    let status = Command::new(env!("CARGO_BIN_EXE_schemabridge"))
        .current_dir(repo_root())
        .args(["bench", "--runs", "1", "--safeguards", "on", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let text = String::from_utf8(status.stdout).unwrap();
    for title in ["Cross-Model Results", "Performance and Cost Comparison", "Per-Scenario pass@1", "Safeguard lift"] {
        assert!(text.contains(title), "missing {title}");
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["reports"][0]["results"].as_array().unwrap().len(), 20);
    std::fs::remove_file(out).unwrap();
}

#[test]
fn cli_rejects_a_bad_fault_spec() {
    let status = Command::new(env!("CARGO_BIN_EXE_schemabridge"))
        .current_dir(repo_root())
        .args(["bench", "--runs", "1", "--fault", "melt:0.5"])
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("unknown fault kind"));
}

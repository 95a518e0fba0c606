//! Benchmark harness: scenario fixtures driven through the gateway for
//! every strategy, safeguard mode and run, with the report tables.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::http::header::CONTENT_TYPE;
use axum::http::{HeaderMap, HeaderValue, Method};
use futures::future::join_all;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use schemabridge_core::fixture::{FixtureError, ScenarioFixture};
use schemabridge_core::metrics::{
    compare_outputs, detection_prf, field_f1, mean, percentile, value_accuracy, DEFAULT_EPSILON,
};
use schemabridge_core::units::UnitRegistry;
use schemabridge_core::{RouteConfig, SchemaRegistry, Strategy, TokenUsage};

use crate::gateway::{Gateway, RecordingUpstream};
use crate::llm::LlmClient;
use crate::monitor::MetricsSink;
use crate::pipeline::Pipeline;
use crate::safeguard::{Tier, DEFAULT_ENSEMBLE_SIZE};

/// Loads every `*.json` fixture in `dir`, ordered by id.
pub fn load_scenarios(dir: &Path) -> Result<Vec<ScenarioFixture>, FixtureError> {
    let io = |message: String| FixtureError { fixture: dir.display().to_string(), message };
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| io(e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut out = Vec::with_capacity(files.len());
    for file in files {
        let text = std::fs::read_to_string(&file).map_err(|e| io(e.to_string()))?;
        let fixture = ScenarioFixture::parse(&text)
            .map_err(|e| FixtureError { fixture: file.display().to_string(), message: e.to_string() })?;
        out.push(fixture);
    }
    out.sort_by_key(|f| f.id);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub strategies: Vec<Strategy>,
    pub safeguards: Vec<bool>,
    pub runs: usize,
    pub epsilon: f64,
    pub ensemble_size: usize,
    /// Runs the scenarios of one combination concurrently. Latency
    /// figures are then not comparable with sequential runs.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            strategies: Strategy::ALL.to_vec(),
            safeguards: vec![true, false],
            runs: 3,
            epsilon: DEFAULT_EPSILON,
            ensemble_size: DEFAULT_ENSEMBLE_SIZE,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub scenario: u8,
    pub strategy: Strategy,
    pub safeguards: bool,
    /// 1-based.
    pub run: usize,
    pub pass: bool,
    pub field_f1: f64,
    pub value_accuracy: f64,
    pub detection_precision: f64,
    pub detection_recall: f64,
    pub detect_ms: f64,
    pub resolve_ms: f64,
    pub safeguard_ms: f64,
    pub latency_ms: f64,
    pub llm_calls: u64,
    pub tokens: TokenUsage,
    pub cost: f64,
    pub tier_used: Tier,
    /// Paths of the first differences against the golden output.
    pub differences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub pass_at_1: f64,
    pub field_f1: f64,
    pub value_accuracy: f64,
    pub detection_precision: f64,
    pub detection_recall: f64,
    pub mean_latency_ms: f64,
    pub p95_latency_ms: f64,
    pub tokens: u64,
    pub cost: f64,
    pub ensemble_rate: f64,
    pub fallback_rate: f64,
}

impl Summary {
    pub fn of<'a>(runs: impl IntoIterator<Item = &'a RunResult>) -> Self {
        let runs: Vec<&RunResult> = runs.into_iter().collect();
        let col = |f: fn(&RunResult) -> f64| mean(&runs.iter().map(|r| f(r)).collect::<Vec<_>>());
        let latencies: Vec<f64> = runs.iter().map(|r| r.latency_ms).collect();
        Self {
            runs: runs.len(),
            pass_at_1: col(|r| f64::from(u8::from(r.pass))),
            field_f1: col(|r| r.field_f1),
            value_accuracy: col(|r| r.value_accuracy),
            detection_precision: col(|r| r.detection_precision),
            detection_recall: col(|r| r.detection_recall),
            mean_latency_ms: mean(&latencies),
            p95_latency_ms: percentile(&latencies, 95.0),
            tokens: runs.iter().map(|r| r.tokens.total()).sum(),
            cost: runs.iter().map(|r| r.cost).sum(),
            ensemble_rate: col(|r| f64::from(u8::from(r.tier_used != Tier::None))),
            fallback_rate: col(|r| f64::from(u8::from(r.tier_used == Tier::Fallback))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationSummary {
    pub strategy: Strategy,
    pub safeguards: bool,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub id: u8,
    pub title: String,
    pub direct: Option<f64>,
    pub codegen: Option<f64>,
}

/// pass@1 with safeguards on minus pass@1 with them off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafeguardLift {
    pub strategy: Strategy,
    pub pass_at_1_on: f64,
    pub pass_at_1_off: f64,
    pub lift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub model: String,
    pub provider: String,
    pub runs_per_combination: usize,
    pub results: Vec<RunResult>,
    /// Per strategy, over both safeguard modes.
    pub strategies: Vec<StrategySummary>,
    pub combinations: Vec<CombinationSummary>,
    pub scenarios: Vec<ScenarioSummary>,
    pub lift: Vec<SafeguardLift>,
    pub total_tokens: u64,
    pub total_cost: f64,
}

impl BenchmarkReport {
    /// Recomputes every aggregate from `results`.
    pub fn from_results(
        model: &str,
        provider: &str,
        runs_per_combination: usize,
        scenarios: &[ScenarioFixture],
        results: Vec<RunResult>,
    ) -> Self {
        let strategies_present: Vec<Strategy> =
            Strategy::ALL.into_iter().filter(|s| results.iter().any(|r| r.strategy == *s)).collect();
        let strategies = strategies_present
            .iter()
            .map(|&s| StrategySummary { strategy: s, summary: Summary::of(results.iter().filter(|r| r.strategy == s)) })
            .collect();
        let mut combinations = Vec::new();
        let mut lift = Vec::new();
        for &s in &strategies_present {
            let mode = |on: bool| results.iter().filter(move |r| r.strategy == s && r.safeguards == on);
            for on in [true, false] {
                if mode(on).next().is_some() {
                    combinations.push(CombinationSummary {
                        strategy: s,
                        safeguards: on,
                        summary: Summary::of(mode(on)),
                    });
                }
            }
            if mode(true).next().is_some() && mode(false).next().is_some() {
                let (on, off) = (Summary::of(mode(true)).pass_at_1, Summary::of(mode(false)).pass_at_1);
                lift.push(SafeguardLift { strategy: s, pass_at_1_on: on, pass_at_1_off: off, lift: on - off });
            }
        }
        let scenario_pass = |id: u8, s: Strategy| {
            let passes: Vec<f64> = results
                .iter()
                .filter(|r| r.scenario == id && r.strategy == s)
                .map(|r| f64::from(u8::from(r.pass)))
                .collect();
            (!passes.is_empty()).then(|| mean(&passes))
        };
        let scenarios = scenarios
            .iter()
            .map(|f| ScenarioSummary {
                id: f.id,
                title: f.title.clone(),
                direct: scenario_pass(f.id, Strategy::Direct),
                codegen: scenario_pass(f.id, Strategy::Codegen),
            })
            .collect();
        Self {
            model: model.to_owned(),
            provider: provider.to_owned(),
            runs_per_combination,
            total_tokens: results.iter().map(|r| r.tokens.total()).sum(),
            total_cost: results.iter().map(|r| r.cost).sum(),
            results,
            strategies,
            combinations,
            scenarios,
            lift,
        }
    }

    pub fn strategy(&self, s: Strategy) -> Option<&Summary> {
        self.strategies.iter().find(|x| x.strategy == s).map(|x| &x.summary)
    }

    pub fn lift_for(&self, s: Strategy) -> Option<f64> {
        self.lift.iter().find(|l| l.strategy == s).map(|l| l.lift)
    }
}

fn registry_for(scenarios: &[ScenarioFixture], strategy: Strategy, safeguards: bool) -> SchemaRegistry {
    let routes = scenarios
        .iter()
        .map(|f| {
            let mut route = RouteConfig::new(&f.route, f.source_schema.clone(), f.target_schema.clone(), strategy);
            route.safeguards_enabled = safeguards;
            route
        })
        .collect();
    SchemaRegistry::new(routes, UnitRegistry::builtin()).expect("scenario routes are distinct")
}

async fn run_one(
    gateway: &Gateway,
    upstream: &RecordingUpstream,
    fixture: &ScenarioFixture,
    epsilon: f64,
) -> RunOutput {
    let mut headers = HeaderMap::new();
    headers.insert(CONTENT_TYPE, HeaderValue::from_static("application/json"));
    let body = Bytes::from(serde_json::to_vec(&fixture.input).unwrap_or_default());
    let response = gateway.handle_request(&Method::POST, &fixture.route, &headers, body).await;
    let forwarded = upstream
        .requests()
        .into_iter()
        .rev()
        .find(|r| r.path_and_query == fixture.route)
        .and_then(|r| serde_json::from_slice::<Value>(&r.body).ok())
        .unwrap_or(Value::Null);
    let comparison = compare_outputs(&forwarded, &fixture.golden, epsilon);
    let (precision, recall) = match &response.report {
        Some(report) => detection_prf(report, &fixture.expected_pairs()),
        None => (0.0, 0.0),
    };
    RunOutput {
        pass: response.status.is_success() && comparison.pass,
        field_f1: field_f1(&forwarded, &fixture.golden),
        value_accuracy: value_accuracy(&forwarded, &fixture.golden, epsilon),
        precision,
        recall,
        record: response.record,
        differences: comparison.diff.into_iter().map(|d| d.path).collect(),
    }
}

struct RunOutput {
    pass: bool,
    field_f1: f64,
    value_accuracy: f64,
    precision: f64,
    recall: f64,
    record: crate::monitor::RequestRecord,
    differences: Vec<String>,
}

/// Runs every (run, strategy, safeguard mode, scenario) combination. Each
/// combination gets a fresh pipeline, so no cache survives between runs.
pub async fn run_benchmark(
    config: &BenchConfig,
    scenarios: &[ScenarioFixture],
    llm: Option<LlmClient>,
) -> BenchmarkReport {
    let mut results = Vec::new();
    for run in 1..=config.runs {
        for &strategy in &config.strategies {
            for &safeguards in &config.safeguards {
                let upstream = Arc::new(RecordingUpstream::new());
                let pipeline = Pipeline::new(llm.clone()).with_ensemble_size(config.ensemble_size);
                let gateway = Gateway::new(
                    registry_for(scenarios, strategy, safeguards),
                    pipeline,
                    upstream.clone(),
                    "bench.invalid",
                    Arc::new(MetricsSink::in_memory()),
                );
                let outputs = if config.parallel {
                    join_all(scenarios.iter().map(|f| run_one(&gateway, &upstream, f, config.epsilon))).await
                } else {
                    let mut v = Vec::with_capacity(scenarios.len());
                    for f in scenarios {
                        v.push(run_one(&gateway, &upstream, f, config.epsilon).await);
                    }
                    v
                };
                for (f, o) in scenarios.iter().zip(outputs) {
                    tracing::debug!(scenario = f.id, %strategy, safeguards, run, pass = o.pass, "run finished");
                    results.push(RunResult {
                        scenario: f.id,
                        strategy,
                        safeguards,
                        run,
                        pass: o.pass,
                        field_f1: o.field_f1,
                        value_accuracy: o.value_accuracy,
                        detection_precision: o.precision,
                        detection_recall: o.recall,
                        detect_ms: o.record.detect_ms,
                        resolve_ms: o.record.resolve_ms,
                        safeguard_ms: o.record.safeguard_ms,
                        latency_ms: o.record.total_ms(),
                        llm_calls: o.record.llm_calls,
                        tokens: o.record.tokens,
                        cost: o.record.cost,
                        tier_used: o.record.tier_used,
                        differences: o.differences,
                    });
                }
            }
        }
    }
    let (model, provider) = llm
        .as_ref()
        .map_or(("none".to_owned(), "none".to_owned()), |l| (l.profile().name.clone(), l.profile().provider.clone()));
    BenchmarkReport::from_results(&model, &provider, config.runs, scenarios, results)
}

fn opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map_or_else(|| "-".to_owned(), f)
}

fn two(v: f64) -> String {
    format!("{v:.2}")
}

fn secs(ms: f64) -> String {
    format!("{:.1}", ms / 1000.0)
}

/// `1,234K` style token totals.
pub fn thousands(tokens: u64) -> String {
    let k = (tokens + 500) / 1000;
    let digits = k.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out + "K"
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| mean(&v))
}

/// Text tables: cross-model results, performance and cost, per-scenario
/// pass@1, then safeguard lift per strategy.
pub fn render_report(reports: &[BenchmarkReport]) -> String {
    let mut out = String::new();
    let metric = |r: &BenchmarkReport, s: Strategy, f: fn(&Summary) -> f64| r.strategy(s).map(f);
    let runs = reports.first().map_or(0, |r| r.runs_per_combination);

    let _ = writeln!(out, "Cross-Model Results (mean over scenarios, {runs} runs per combination)");
    let _ = writeln!(out, "{:<22}{:<10}{:<14}{:<14}{:<18}", "", "", "pass@1", "Value Acc.", "Mean Latency (s)");
    let _ = writeln!(
        out,
        "{:<22}{:<10}{:<7}{:<7}{:<7}{:<7}{:<9}{:<9}Total Cost",
        "Model", "Provider", "D", "C", "D", "C", "D", "C"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<22}{:<10}{:<7}{:<7}{:<7}{:<7}{:<9}{:<9}${:.2}",
            r.model,
            r.provider,
            opt(metric(r, Strategy::Direct, |s| s.pass_at_1), two),
            opt(metric(r, Strategy::Codegen, |s| s.pass_at_1), two),
            opt(metric(r, Strategy::Direct, |s| s.value_accuracy), two),
            opt(metric(r, Strategy::Codegen, |s| s.value_accuracy), two),
            opt(metric(r, Strategy::Direct, |s| s.mean_latency_ms), secs),
            opt(metric(r, Strategy::Codegen, |s| s.mean_latency_ms), secs),
            r.total_cost,
        );
    }
    if !reports.is_empty() {
        let across = |s: Strategy, f: fn(&Summary) -> f64| mean_opt(reports.iter().map(|r| metric(r, s, f)));
        let _ = writeln!(
            out,
            "{:<22}{:<10}{:<7}{:<7}{:<7}{:<7}{:<9}{:<9}${:.2}",
            "Mean",
            "",
            opt(across(Strategy::Direct, |s| s.pass_at_1), two),
            opt(across(Strategy::Codegen, |s| s.pass_at_1), two),
            opt(across(Strategy::Direct, |s| s.value_accuracy), two),
            opt(across(Strategy::Codegen, |s| s.value_accuracy), two),
            opt(across(Strategy::Direct, |s| s.mean_latency_ms), secs),
            opt(across(Strategy::Codegen, |s| s.mean_latency_ms), secs),
            mean(&reports.iter().map(|r| r.total_cost).collect::<Vec<_>>()),
        );
    }
    let _ = writeln!(out, "D = DIRECT, C = CODEGEN. Total cost covers every combination and run.");

    let _ = writeln!(out, "\nPerformance and Cost Comparison");
    let _ = writeln!(out, "{:<22}{:<16}{:<16}Cost ($)", "Model", "P95 Lat. (s)", "Tokens (total)");
    for r in reports {
        let p95 = format!(
            "{}-{}",
            opt(metric(r, Strategy::Direct, |s| s.p95_latency_ms), secs),
            opt(metric(r, Strategy::Codegen, |s| s.p95_latency_ms), secs)
        );
        let _ = writeln!(out, "{:<22}{:<16}{:<16}{:.2}", r.model, p95, thousands(r.total_tokens), r.total_cost);
    }
    let _ = writeln!(
        out,
        "P95 latency shows DIRECT-CODEGEN, nearest rank over {runs} runs per scenario and mode; with 3 runs it is the maximum."
    );

    let _ = writeln!(out, "\nPer-Scenario pass@1 (mean across models)");
    let _ = writeln!(out, "{:<4}{:<24}{:<7}C", "#", "Scenario", "D");
    let mut ids: Vec<(u8, String)> =
        reports.iter().flat_map(|r| r.scenarios.iter().map(|s| (s.id, s.title.clone()))).collect();
    ids.sort();
    ids.dedup_by_key(|(id, _)| *id);
    let scenario = |id: u8, f: fn(&ScenarioSummary) -> Option<f64>| {
        mean_opt(reports.iter().flat_map(|r| r.scenarios.iter().filter(move |s| s.id == id).map(f)))
    };
    for (id, title) in &ids {
        let _ = writeln!(
            out,
            "{:<4}{:<24}{:<7}{}",
            id,
            title,
            opt(scenario(*id, |s| s.direct), two),
            opt(scenario(*id, |s| s.codegen), two)
        );
    }
    if !ids.is_empty() {
        let col = |f: fn(&ScenarioSummary) -> Option<f64>| mean_opt(ids.iter().map(|(id, _)| scenario(*id, f)));
        let _ =
            writeln!(out, "{:<4}{:<24}{:<7}{}", "", "Mean", opt(col(|s| s.direct), two), opt(col(|s| s.codegen), two));
    }

    let _ = writeln!(out, "\nSafeguard lift (pass@1 with safeguards minus without)");
    let _ = writeln!(out, "{:<22}{:<10}{:<8}{:<8}Lift", "Model", "Strategy", "On", "Off");
    for r in reports {
        for l in &r.lift {
            let _ = writeln!(
                out,
                "{:<22}{:<10}{:<8}{:<8}{:+.2}",
                r.model,
                l.strategy.as_str(),
                two(l.pass_at_1_on),
                two(l.pass_at_1_off),
                l.lift
            );
        }
    }
    out
}

/// JSON rendering of the same reports the text tables are built from.
pub fn render_json(reports: &[BenchmarkReport]) -> Value {
    serde_json::json!({ "reports": reports })
}

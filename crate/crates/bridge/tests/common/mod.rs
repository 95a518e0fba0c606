#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::http::{HeaderMap, HeaderValue, Method};
use serde_json::Value;

use schemabridge::bench::load_scenarios;
use schemabridge::core::fixture::ScenarioFixture;
use schemabridge::core::{RouteConfig, SchemaRegistry, Strategy};
use schemabridge::gateway::{Gateway, GatewayResponse, RecordingUpstream};
use schemabridge::llm::mock::{MockBackend, MockMode};
use schemabridge::monitor::MetricsSink;
use schemabridge::{LlmClient, ModelProfile, Pipeline, PromptSet};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scenarios() -> Vec<ScenarioFixture> {
    load_scenarios(&repo_root().join("fixtures/scenarios")).expect("scenario fixtures")
}

pub fn mock(mode: MockMode, seed: u64) -> Arc<MockBackend> {
    Arc::new(MockBackend::from_dir(&repo_root().join("fixtures/mock"), mode, seed).expect("mock fixtures"))
}

pub fn client(backend: Arc<MockBackend>) -> LlmClient {
    LlmClient::new(backend, ModelProfile::mock(), PromptSet::builtin())
}

/// One route per scenario, on the scenario's own path.
pub fn scenario_registry(fixtures: &[ScenarioFixture], strategy: Strategy, safeguards: bool) -> SchemaRegistry {
    let routes = fixtures
        .iter()
        .map(|f| {
            let mut r = RouteConfig::new(&f.route, f.source_schema.clone(), f.target_schema.clone(), strategy);
            r.safeguards_enabled = safeguards;
            r
        })
        .collect();
    SchemaRegistry::new(routes, Default::default()).expect("registry")
}

pub fn gateway(registry: SchemaRegistry, llm: Option<LlmClient>) -> (Gateway, Arc<RecordingUpstream>) {
    let upstream = Arc::new(RecordingUpstream::new());
    let gw = Gateway::new(
        registry,
        Pipeline::new(llm),
        upstream.clone(),
        "backend:9000",
        Arc::new(MetricsSink::in_memory()),
    );
    (gw, upstream)
}

pub fn json_headers() -> HeaderMap {
    let mut h = HeaderMap::new();
    h.insert("content-type", HeaderValue::from_static("application/json"));
    h
}

pub async fn post(gw: &Gateway, path: &str, body: &Value) -> GatewayResponse {
    gw.handle_request(&Method::POST, path, &json_headers(), Bytes::from(serde_json::to_vec(body).unwrap())).await
}

pub fn body_json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("forwarded body is JSON")
}

//! HTTP interception: routing, body replacement and forwarding.

use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use axum::body::{Body, Bytes};
use axum::extract::{OriginalUri, State};
use axum::http::header::{CONNECTION, CONTENT_LENGTH, CONTENT_TYPE, HOST, TRANSFER_ENCODING};
use axum::http::{HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::Response;
use axum::Router;
use serde_json::Value;

use schemabridge_core::{MismatchReport, SchemaRegistry};

use crate::monitor::{now_ms, MetricsSink, Outcome, RequestRecord};
use crate::pipeline::Pipeline;

#[derive(Debug, Clone)]
pub struct ForwardRequest {
    /// `host:port` or base URL.
    pub service: String,
    pub method: Method,
    pub path_and_query: String,
    pub headers: HeaderMap,
    pub body: Bytes,
}

#[derive(Debug, Clone)]
pub struct UpstreamResponse {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Bytes,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("upstream {service} unreachable: {message}")]
pub struct UpstreamError {
    pub service: String,
    pub message: String,
}

#[async_trait]
pub trait Upstream: Send + Sync {
    async fn forward(&self, request: ForwardRequest) -> Result<UpstreamResponse, UpstreamError>;
}

fn is_hop_header(name: &axum::http::HeaderName) -> bool {
    name == CONNECTION || name == TRANSFER_ENCODING || name == HOST || name == CONTENT_LENGTH
}

pub fn service_url(service: &str, path_and_query: &str) -> String {
    let base = service.trim_end_matches('/');
    if base.starts_with("http://") || base.starts_with("https://") {
        format!("{base}{path_and_query}")
    } else {
        format!("http://{base}{path_and_query}")
    }
}

pub struct ReqwestUpstream {
    http: reqwest::Client,
}

impl Default for ReqwestUpstream {
    fn default() -> Self {
        Self::new()
    }
}

impl ReqwestUpstream {
    pub fn new() -> Self {
        Self { http: reqwest::Client::new() }
    }
}

#[async_trait]
impl Upstream for ReqwestUpstream {
    async fn forward(&self, request: ForwardRequest) -> Result<UpstreamResponse, UpstreamError> {
        let fail = |e: reqwest::Error| UpstreamError { service: request.service.clone(), message: e.to_string() };
        let mut headers = request.headers.clone();
        headers.retain_hop_free();
        let response = self
            .http
            .request(request.method.clone(), service_url(&request.service, &request.path_and_query))
            .headers(headers)
            .body(request.body.clone())
            .send()
            .await
            .map_err(fail)?;
        let status = response.status();
        let mut headers = response.headers().clone();
        headers.retain_hop_free();
        let body = response.bytes().await.map_err(fail)?;
        Ok(UpstreamResponse { status, headers, body })
    }
}

trait HopFree {
    fn retain_hop_free(&mut self);
}

impl HopFree for HeaderMap {
    fn retain_hop_free(&mut self) {
        let drop: Vec<_> = self.keys().filter(|k| is_hop_header(k)).cloned().collect();
        for name in drop {
            self.remove(name);
        }
    }
}

/// Captures forwarded requests and answers 200 with an empty JSON object.
#[derive(Default)]
pub struct RecordingUpstream {
    seen: Mutex<Vec<ForwardRequest>>,
    unreachable: bool,
}

impl RecordingUpstream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails every forward, as an unreachable backend would.
    pub fn unreachable() -> Self {
        Self { seen: Mutex::default(), unreachable: true }
    }

    pub fn requests(&self) -> Vec<ForwardRequest> {
        self.seen.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn last(&self) -> Option<ForwardRequest> {
        self.seen.lock().unwrap_or_else(|e| e.into_inner()).last().cloned()
    }
}

#[async_trait]
impl Upstream for RecordingUpstream {
    async fn forward(&self, request: ForwardRequest) -> Result<UpstreamResponse, UpstreamError> {
        if self.unreachable {
            return Err(UpstreamError { service: request.service, message: "connection refused".into() });
        }
        self.seen.lock().unwrap_or_else(|e| e.into_inner()).push(request);
        let mut headers = HeaderMap::new();
        headers.insert(CONTENT_TYPE, HeaderValue::from_static("application/json"));
        Ok(UpstreamResponse { status: StatusCode::OK, headers, body: Bytes::from_static(b"{}") })
    }
}

#[derive(Debug, Clone)]
pub struct GatewayResponse {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Bytes,
    pub record: RequestRecord,
    /// Merged mismatch report, for requests that ran the pipeline.
    pub report: Option<MismatchReport>,
}

pub struct Gateway {
    registry: SchemaRegistry,
    pipeline: Pipeline,
    upstream: Arc<dyn Upstream>,
    default_service: String,
    metrics: Arc<MetricsSink>,
}

fn is_json_content(headers: &HeaderMap) -> bool {
    match headers.get(CONTENT_TYPE).and_then(|v| v.to_str().ok()) {
        None => true,
        Some(ct) => {
            let essence = ct.split(';').next().unwrap_or("").trim().to_ascii_lowercase();
            essence == "application/json" || essence.ends_with("+json")
        }
    }
}

fn plain(status: StatusCode, message: &str) -> (StatusCode, HeaderMap, Bytes) {
    let mut headers = HeaderMap::new();
    headers.insert(CONTENT_TYPE, HeaderValue::from_static("application/json"));
    let body = serde_json::to_vec(&serde_json::json!({"error": message})).unwrap_or_default();
    (status, headers, Bytes::from(body))
}

impl Gateway {
    pub fn new(
        registry: SchemaRegistry,
        pipeline: Pipeline,
        upstream: Arc<dyn Upstream>,
        default_service: &str,
        metrics: Arc<MetricsSink>,
    ) -> Self {
        Self { registry, pipeline, upstream, default_service: default_service.to_owned(), metrics }
    }

    pub fn registry(&self) -> &SchemaRegistry {
        &self.registry
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn metrics(&self) -> &MetricsSink {
        &self.metrics
    }

    async fn forward(&self, request: ForwardRequest) -> (StatusCode, HeaderMap, Bytes) {
        match self.upstream.forward(request).await {
            Ok(r) => (r.status, r.headers, r.body),
            Err(e) => {
                tracing::warn!(error = %e, "forward failed");
                plain(StatusCode::BAD_GATEWAY, &e.to_string())
            }
        }
    }

    fn finish(
        &self,
        parts: (StatusCode, HeaderMap, Bytes),
        record: RequestRecord,
        report: Option<MismatchReport>,
    ) -> GatewayResponse {
        self.metrics.record(&record);
        let (status, headers, body) = parts;
        GatewayResponse { status, headers, body, record, report }
    }

    /// Transforms POST/PUT/PATCH JSON bodies on registered routes and
    /// forwards them to the route's target service; everything else goes
    /// to the default service unchanged.
    pub async fn handle_request(
        &self,
        method: &Method,
        path_and_query: &str,
        headers: &HeaderMap,
        body: Bytes,
    ) -> GatewayResponse {
        let path = path_and_query.split('?').next().unwrap_or(path_and_query);
        let passthrough = ForwardRequest {
            service: self.default_service.clone(),
            method: method.clone(),
            path_and_query: path_and_query.to_owned(),
            headers: headers.clone(),
            body: body.clone(),
        };
        let eligible = matches!(*method, Method::POST | Method::PUT | Method::PATCH) && is_json_content(headers);
        let route = if eligible { self.registry.match_route(method.as_str(), path) } else { None };
        let Some(route) = route else {
            let parts = self.forward(passthrough).await;
            return self.finish(parts, RequestRecord::passthrough(method.as_str(), path), None);
        };

        let mut record = RequestRecord::passthrough(method.as_str(), path);
        record.route = Some(route.id());
        record.strategy = Some(route.strategy);
        let data: Value = match serde_json::from_slice(&body) {
            Ok(v @ Value::Object(_)) => v,
            Ok(_) => {
                record.outcome = Outcome::Degraded;
                return self.finish(plain(StatusCode::BAD_REQUEST, "request body must be a JSON object"), record, None);
            }
            Err(e) => {
                record.outcome = Outcome::Degraded;
                return self.finish(plain(StatusCode::BAD_REQUEST, &format!("invalid JSON body: {e}")), record, None);
            }
        };

        let run = self.pipeline.run(route, &data, self.registry.units()).await;
        record.timestamp_ms = now_ms();
        record.detect_ms = run.detect_ms;
        record.resolve_ms = run.resolve_ms;
        record.safeguard_ms = run.safeguard_ms;
        record.llm_calls = run.llm_calls;
        record.tokens = run.tokens;
        record.cost = self.pipeline.llm().map_or(0.0, |llm| llm.profile().estimate_cost(run.tokens));
        record.tier_used = run.tier_used;
        record.cache_hit = run.cache_hit;
        record.outcome = if run.transformed { Outcome::Transformed } else { Outcome::Degraded };
        record.ensemble_triggered = run.ensemble_triggered;
        record.fallback_triggered = run.fallback_triggered;
        record.detection_degraded = run.detection_degraded;

        let mut forward_headers = headers.clone();
        forward_headers.remove(CONTENT_LENGTH);
        forward_headers.insert(CONTENT_TYPE, HeaderValue::from_static("application/json"));
        let new_body = Bytes::from(serde_json::to_vec(&run.output).unwrap_or_default());
        if let Ok(len) = HeaderValue::from_str(&new_body.len().to_string()) {
            forward_headers.insert(CONTENT_LENGTH, len);
        }
        let service = if route.target_service.is_empty() { &self.default_service } else { &route.target_service };
        let parts = self
            .forward(ForwardRequest {
                service: service.clone(),
                method: method.clone(),
                path_and_query: path_and_query.to_owned(),
                headers: forward_headers,
                body: new_body,
            })
            .await;
        self.finish(parts, record, Some(run.report))
    }
}

async fn intercept(
    State(gateway): State<Arc<Gateway>>,
    method: Method,
    OriginalUri(uri): OriginalUri,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let path_and_query = uri.path_and_query().map_or_else(|| uri.path().to_owned(), |pq| pq.as_str().to_owned());
    let r = gateway.handle_request(&method, &path_and_query, &headers, body).await;
    let mut response = Response::new(Body::from(r.body));
    *response.status_mut() = r.status;
    *response.headers_mut() = r.headers;
    response
}

/// Every path and method goes through [`Gateway::handle_request`].
pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new().fallback(intercept).with_state(gateway)
}

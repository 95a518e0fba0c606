//! Deterministic offline backend.
//!
//! Mismatch reports and mappings come from fixture files keyed by schema
//! hash pair. Adapters are compiled from the mapping in the request context
//! and transformed data is produced by running that mapping, so a faithful
//! mock is exactly as good as its fixture. Faults are injected from a seeded
//! ChaCha stream indexed by the per-contract call number.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path as FsPath;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use async_trait::async_trait;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use schemabridge_core::adapter::execute_unchecked;
use schemabridge_core::contract::{ContractKind, TokenUsage};
use schemabridge_core::metrics::instance_leaves;
use schemabridge_core::{Expr, HashPair, Schema, SchemaMapping};

use super::{approx_tokens, LlmBackend, LlmError, LlmReply, LlmRequest, ModelProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    /// One entry of the response is removed.
    DropField,
    /// The body does not satisfy the contract at all.
    Garbled,
    /// Sources are swapped or values perturbed.
    WrongValue,
    /// An expression calls a function outside the whitelist.
    BadFunction,
    /// One of the above, drawn per call.
    Any,
}

impl FaultKind {
    pub const CONCRETE: [FaultKind; 4] =
        [FaultKind::DropField, FaultKind::Garbled, FaultKind::WrongValue, FaultKind::BadFunction];

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "drop_field" => FaultKind::DropField,
            "garbled" => FaultKind::Garbled,
            "wrong_value" => FaultKind::WrongValue,
            "bad_fn" => FaultKind::BadFunction,
            "any" => FaultKind::Any,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MockMode {
    Faithful,
    Faulty {
        kind: FaultKind,
        rate: f64,
    },
    /// Every call times out.
    Outage,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("mock fixture {file}: {message}")]
pub struct MockFixtureError {
    pub file: String,
    pub message: String,
}

#[derive(Debug, Deserialize)]
struct FixtureDoc {
    source_schema: Value,
    target_schema: Value,
    mismatch_report: Value,
    mapping: Value,
}

#[derive(Debug, Clone)]
struct Canned {
    mismatch_report: Value,
    mapping: Value,
}

pub struct MockBackend {
    canned: BTreeMap<HashPair, Canned>,
    mode: MockMode,
    seed: u64,
    latency: Duration,
    counters: [AtomicU64; 4],
}

impl MockBackend {
    pub fn new(mode: MockMode, seed: u64) -> Self {
        Self { canned: BTreeMap::new(), mode, seed, latency: Duration::ZERO, counters: Default::default() }
    }

    /// Loads every `*.json` file in `dir` as a fixture.
    pub fn from_dir(dir: &FsPath, mode: MockMode, seed: u64) -> Result<Self, MockFixtureError> {
        let mut backend = Self::new(mode, seed);
        let read_err = |file: &FsPath, message: String| MockFixtureError { file: file.display().to_string(), message };
        let mut files: Vec<_> = fs::read_dir(dir)
            .map_err(|e| read_err(dir, e.to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for file in files {
            let text = fs::read_to_string(&file).map_err(|e| read_err(&file, e.to_string()))?;
            backend.add_fixture_text(&text).map_err(|m| read_err(&file, m))?;
        }
        Ok(backend)
    }

    /// Adds one fixture document.
    pub fn add_fixture_text(&mut self, text: &str) -> Result<(), String> {
        let doc: FixtureDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let source = Schema::from_value(doc.source_schema).map_err(|e| e.to_string())?;
        let target = Schema::from_value(doc.target_schema).map_err(|e| e.to_string())?;
        self.add(&source, &target, doc.mismatch_report, doc.mapping);
        Ok(())
    }

    /// Registers wire-form responses for a schema pair.
    pub fn add(&mut self, source: &Schema, target: &Schema, mismatch_report: Value, mapping: Value) {
        self.canned.insert((source.hash(), target.hash()), Canned { mismatch_report, mapping });
    }

    /// Simulated per-call latency.
    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    pub fn set_mode(&mut self, mode: MockMode) {
        self.mode = mode;
    }

    pub fn fixture_count(&self) -> usize {
        self.canned.len()
    }

    /// Calls served so far for `contract`.
    pub fn calls(&self, contract: ContractKind) -> u64 {
        self.counters[contract_index(contract)].load(Ordering::Relaxed)
    }

    fn faithful(&self, request: &LlmRequest) -> Result<Value, LlmError> {
        let ctx = &request.context;
        let missing = || LlmError::MissingFixture { contract: request.contract, pair: pair_label(&ctx.pair) };
        let canned = self.canned.get(&ctx.pair);
        let same_schema = ctx.pair.0 == ctx.pair.1;
        match request.contract {
            ContractKind::MismatchReport => match canned {
                Some(c) => Ok(c.mismatch_report.clone()),
                None if same_schema => Ok(json!({"mismatches": []})),
                None => Err(missing()),
            },
            ContractKind::SchemaMapping => match canned {
                Some(c) => Ok(c.mapping.clone()),
                None if same_schema => Ok(json!({"mappings": SchemaMapping::identity(&ctx.source).fields})),
                None => Err(missing()),
            },
            ContractKind::AdapterProgram => {
                let mapping = ctx.mapping.as_ref().ok_or_else(missing)?;
                match mapping.to_program() {
                    Ok(program) => Ok(serde_json::to_value(program).unwrap_or(Value::Null)),
                    Err(e) => Ok(json!({"error": e.to_string()})),
                }
            }
            ContractKind::TransformedData => {
                let mapping = ctx.mapping.as_ref().ok_or_else(missing)?;
                let data = ctx.data.as_ref().ok_or_else(missing)?;
                let output = mapping
                    .to_program()
                    .ok()
                    .and_then(|program| execute_unchecked(&program, data).ok())
                    .unwrap_or_else(|| json!({}));
                Ok(json!({"data": output}))
            }
        }
    }
}

fn contract_index(contract: ContractKind) -> usize {
    ContractKind::ALL.iter().position(|k| *k == contract).unwrap_or(0)
}

fn pair_label(pair: &HashPair) -> String {
    let (s, t) = (pair.0.to_hex(), pair.1.to_hex());
    format!("{}..{}", &s[..12], &t[..12])
}

/// Removes one element of the array under `key`, if any.
fn drop_one(body: &mut Value, key: &str, rng: &mut ChaCha8Rng) {
    if let Some(list) = body.get_mut(key).and_then(Value::as_array_mut) {
        if !list.is_empty() {
            let i = rng.random_range(0..list.len());
            list.remove(i);
        }
    }
}

fn corrupt(contract: ContractKind, kind: FaultKind, body: &mut Value, rng: &mut ChaCha8Rng) {
    if kind == FaultKind::Garbled {
        *body = json!({"response": "Here is the result you asked for."});
        return;
    }
    match contract {
        ContractKind::MismatchReport => drop_one(body, "mismatches", rng),
        ContractKind::SchemaMapping => corrupt_list(body, "mappings", "transform", kind, rng),
        ContractKind::AdapterProgram => corrupt_list(body, "assignments", "expr", kind, rng),
        ContractKind::TransformedData => corrupt_data(body, kind, rng),
    }
}

/// Mapping entries and adapter assignments share a shape: a list of
/// objects carrying an expression under `expr_key`.
fn corrupt_list(body: &mut Value, key: &str, expr_key: &str, kind: FaultKind, rng: &mut ChaCha8Rng) {
    let Some(list) = body.get_mut(key).and_then(Value::as_array_mut) else { return };
    if list.is_empty() {
        return;
    }
    let i = rng.random_range(0..list.len());
    match kind {
        FaultKind::DropField => {
            list.remove(i);
        }
        FaultKind::BadFunction => {
            let bad = if expr_key == "transform" {
                json!("exec($)")
            } else {
                serde_json::to_value(Expr::call("exec", vec![])).unwrap_or(Value::Null)
            };
            list[i][expr_key] = bad;
        }
        FaultKind::WrongValue if list.len() >= 2 => {
            let j = (i + 1 + rng.random_range(0..list.len() - 1)) % list.len();
            let a = list[i][expr_key].take();
            let b = std::mem::replace(&mut list[j][expr_key], a);
            list[i][expr_key] = b;
            if expr_key == "transform" {
                let a = list[i]["source_path"].take();
                let b = std::mem::replace(&mut list[j]["source_path"], a);
                list[i]["source_path"] = b;
            }
        }
        FaultKind::WrongValue => {
            list[i][expr_key] = if expr_key == "transform" { json!("0") } else { json!({"const": 0}) };
        }
        FaultKind::Garbled | FaultKind::Any => {}
    }
}

fn corrupt_data(body: &mut Value, kind: FaultKind, rng: &mut ChaCha8Rng) {
    let Some(data) = body.get_mut("data") else { return };
    let leaves: Vec<Vec<String>> = instance_leaves(data)
        .keys()
        .filter(|p| !p.has_items())
        .map(|p| p.to_string().split('.').map(str::to_owned).collect())
        .collect();
    if leaves.is_empty() {
        return;
    }
    let leaf = &leaves[rng.random_range(0..leaves.len())];
    let (last, parents) = leaf.split_last().expect("leaf paths are non-empty");
    let mut slot = &mut *data;
    for p in parents {
        slot = &mut slot[p.as_str()];
    }
    let Some(obj) = slot.as_object_mut() else { return };
    match kind {
        FaultKind::DropField | FaultKind::BadFunction => {
            obj.remove(last);
        }
        _ => {
            let v = obj.get(last).cloned().unwrap_or(Value::Null);
            let perturbed = match v {
                Value::Number(n) if n.is_i64() => json!(n.as_i64().unwrap_or(0).wrapping_add(7)),
                Value::Number(n) => json!(n.as_f64().unwrap_or(0.0) + 7.5),
                Value::String(s) => json!(format!("{s}_x")),
                Value::Bool(b) => json!(!b),
                other => other,
            };
            obj.insert(last.clone(), perturbed);
        }
    }
}

#[async_trait]
impl LlmBackend for MockBackend {
    async fn complete(&self, _profile: &ModelProfile, request: &LlmRequest) -> Result<LlmReply, LlmError> {
        let index = self.counters[contract_index(request.contract)].fetch_add(1, Ordering::Relaxed);
        if !self.latency.is_zero() {
            tokio::time::sleep(self.latency).await;
        }
        let mut body = match self.mode {
            MockMode::Outage => return Err(LlmError::Timeout(Duration::ZERO)),
            _ => self.faithful(request)?,
        };
        if let MockMode::Faulty { kind, rate } = self.mode {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(((contract_index(request.contract) as u64) << 48) | index);
            if rng.random::<f64>() < rate {
                let kind = match kind {
                    FaultKind::Any => FaultKind::CONCRETE[rng.random_range(0..FaultKind::CONCRETE.len())],
                    k => k,
                };
                corrupt(request.contract, kind, &mut body, &mut rng);
            }
        }
        let usage = TokenUsage::new(approx_tokens(&request.prompt), approx_tokens(&body.to_string()));
        Ok(LlmReply { body, usage })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::RequestContext;
    use schemabridge_core::contract::verify_response;

    fn schemas() -> (Schema, Schema) {
        (
            Schema::parse(
                r#"{"type":"object","properties":{"a":{"type":"number"},"b":{"type":"string"}},"required":["a","b"]}"#,
            )
            .unwrap(),
            Schema::parse(
                r#"{"type":"object","properties":{"x":{"type":"number"},"y":{"type":"string"}},"required":["x","y"]}"#,
            )
            .unwrap(),
        )
    }

    fn backend(mode: MockMode) -> MockBackend {
        let (s, t) = schemas();
        let mut b = MockBackend::new(mode, 7);
        b.add(
            &s,
            &t,
            json!({"mismatches": [{"kind": "naming_mismatch", "source_path": "a", "target_path": "x", "detail": "rename"}]}),
            json!({"mappings": [
                {"source_path": "a", "target_path": "x", "transform": "$", "confidence": 0.9},
                {"source_path": "b", "target_path": "y", "transform": "$", "confidence": 0.9}
            ]}),
        );
        b
    }

    fn request(contract: ContractKind) -> LlmRequest {
        let (s, t) = schemas();
        let mut context = RequestContext::new(&s, &t);
        if let ContractResponse::SchemaMapping(m) = verify_response(
            ContractKind::SchemaMapping,
            &json!({"mappings": [
                {"source_path": "a", "target_path": "x", "transform": "$", "confidence": 0.9},
                {"source_path": "b", "target_path": "y", "transform": "$", "confidence": 0.9}
            ]}),
        )
        .unwrap()
        {
            context.mapping = Some(m);
        }
        context.data = Some(json!({"a": 1.5, "b": "q"}));
        LlmRequest { contract, prompt: "p".repeat(40), context }
    }

    use schemabridge_core::ContractResponse;

    #[tokio::test]
    async fn faithful_answers_every_contract() {
        let b = backend(MockMode::Faithful);
        let p = ModelProfile::mock();
        for contract in ContractKind::ALL {
            let reply = b.complete(&p, &request(contract)).await.unwrap();
            verify_response(contract, &reply.body).unwrap();
            assert_eq!(reply.usage.input_tokens, 10);
        }
        let data = b.complete(&p, &request(ContractKind::TransformedData)).await.unwrap();
        assert_eq!(data.body, json!({"data": {"x": 1.5, "y": "q"}}));
        assert_eq!(b.calls(ContractKind::TransformedData), 2);
    }

    #[tokio::test]
    async fn unknown_pair_is_missing_fixture() {
        let b = MockBackend::new(MockMode::Faithful, 0);
        let err = b.complete(&ModelProfile::mock(), &request(ContractKind::SchemaMapping)).await.unwrap_err();
        assert!(matches!(err, LlmError::MissingFixture { .. }));
    }

    #[tokio::test]
    async fn fault_injection_is_seeded() {
        let run = || async {
            let b = backend(MockMode::Faulty { kind: FaultKind::Any, rate: 0.5 });
            let mut bodies = Vec::new();
            for _ in 0..20 {
                bodies
                    .push(b.complete(&ModelProfile::mock(), &request(ContractKind::SchemaMapping)).await.unwrap().body);
            }
            bodies
        };
        let first = run().await;
        assert_eq!(first, run().await);
        let faithful = backend(MockMode::Faithful).faithful(&request(ContractKind::SchemaMapping)).unwrap();
        let corrupted = first.iter().filter(|b| **b != faithful).count();
        assert!((3..=17).contains(&corrupted), "{corrupted} of 20 corrupted");
    }

    #[tokio::test]
    async fn garbled_violates_the_contract() {
        let b = backend(MockMode::Faulty { kind: FaultKind::Garbled, rate: 1.0 });
        for contract in ContractKind::ALL {
            let reply = b.complete(&ModelProfile::mock(), &request(contract)).await.unwrap();
            assert!(verify_response(contract, &reply.body).is_err());
        }
    }

    #[tokio::test]
    async fn wrong_value_changes_data() {
        let b = backend(MockMode::Faulty { kind: FaultKind::WrongValue, rate: 1.0 });
        let reply = b.complete(&ModelProfile::mock(), &request(ContractKind::TransformedData)).await.unwrap();
        assert_ne!(reply.body, json!({"data": {"x": 1.5, "y": "q"}}));
    }
}

//! Mapping generation and the two resolution strategies.
//!
//! Mappings and validated adapters are cached separately by schema-hash
//! pair, so DIRECT and CODEGEN routes over one pair share the mapping.

use std::time::SystemTime;

use serde_json::Value;

use schemabridge_core::adapter::{execute_adapter, validate_adapter, AdapterError, EvalError};
use schemabridge_core::contract::{ContractKind, ContractResponse};
use schemabridge_core::mapping::MappingError;
use schemabridge_core::{
    AdapterProgram, HashPair, MismatchReport, RouteConfig, Schema, SchemaMapping, Strategy, ValidatedAdapter,
};

use crate::cache::SingleFlightCache;
use crate::detect::schema_text;
use crate::llm::{LlmClient, LlmError, Meter, PromptKind, RequestContext};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ResolutionFailure {
    #[error("model call failed: {0}")]
    Llm(#[from] LlmError),
    #[error("invalid mapping: {0}")]
    Mapping(#[from] MappingError),
    #[error("adapter rejected: {0}")]
    Adapter(#[from] AdapterError),
    #[error("adapter execution failed: {0}")]
    Eval(#[from] EvalError),
    #[error("no model backend is configured")]
    LlmDisabled,
}

#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub mapping: SchemaMapping,
    pub adapter: Option<ValidatedAdapter>,
    pub created_at: SystemTime,
}

#[derive(Debug, Clone)]
pub struct ResolutionOutcome {
    pub output: Value,
    pub strategy: Strategy,
    /// Calls made by this layer for this request; detection is counted
    /// by the caller.
    pub llm_calls: u64,
    pub cache_hit: bool,
    pub mapping: SchemaMapping,
}

fn to_text<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).unwrap_or_default()
}

/// One mapping call, verified against both schemas.
pub async fn generate_mapping(
    llm: &LlmClient,
    source: &Schema,
    target: &Schema,
    report: &MismatchReport,
    meter: &Meter,
) -> Result<SchemaMapping, ResolutionFailure> {
    let (s, t, r) = (schema_text(source), schema_text(target), to_text(&report.mismatches));
    let prompt = llm
        .prompts()
        .render(PromptKind::GenerateMapping, &[("source_schema", &s), ("target_schema", &t), ("mismatch_report", &r)])
        .map_err(LlmError::from)?;
    let mut context = RequestContext::new(source, target);
    context.report = Some(report.clone());
    let pair = context.pair;
    let (response, _) = llm.complete_structured(ContractKind::SchemaMapping, prompt, context, meter).await?;
    let ContractResponse::SchemaMapping(mapping) = response else {
        unreachable!("verified response matches the requested contract")
    };
    mapping.verify(source, target)?;
    Ok(mapping.with_pair(pair))
}

/// One transform call. The result is not checked against the target
/// schema here.
pub async fn transform_direct(
    llm: &LlmClient,
    source: &Schema,
    target: &Schema,
    mapping: &SchemaMapping,
    data: &Value,
    meter: &Meter,
) -> Result<Value, ResolutionFailure> {
    let (s, t, m, d) = (schema_text(source), schema_text(target), to_text(&mapping.fields), to_text(data));
    let prompt = llm
        .prompts()
        .render(
            PromptKind::TransformData,
            &[("source_schema", &s), ("target_schema", &t), ("mapping", &m), ("data", &d)],
        )
        .map_err(LlmError::from)?;
    let mut context = RequestContext::new(source, target);
    context.mapping = Some(mapping.clone());
    context.data = Some(data.clone());
    let (response, _) = llm.complete_structured(ContractKind::TransformedData, prompt, context, meter).await?;
    let ContractResponse::TransformedData(output) = response else {
        unreachable!("verified response matches the requested contract")
    };
    Ok(output)
}

/// One adapter call. Whitelist and path checks happen in
/// [`validate_adapter`], not here.
pub async fn generate_adapter(
    llm: &LlmClient,
    source: &Schema,
    target: &Schema,
    mapping: &SchemaMapping,
    meter: &Meter,
) -> Result<AdapterProgram, ResolutionFailure> {
    let (s, t, m) = (schema_text(source), schema_text(target), to_text(&mapping.fields));
    let prompt = llm
        .prompts()
        .render(PromptKind::GenerateAdapter, &[("source_schema", &s), ("target_schema", &t), ("mapping", &m)])
        .map_err(LlmError::from)?;
    let mut context = RequestContext::new(source, target);
    context.mapping = Some(mapping.clone());
    let (response, _) = llm.complete_structured(ContractKind::AdapterProgram, prompt, context, meter).await?;
    let ContractResponse::AdapterProgram(program) = response else {
        unreachable!("verified response matches the requested contract")
    };
    Ok(program)
}

/// Generates an adapter and validates it with `sample` as the trial input.
pub async fn compile_adapter(
    llm: &LlmClient,
    source: &Schema,
    target: &Schema,
    mapping: &SchemaMapping,
    sample: &Value,
    meter: &Meter,
) -> Result<ValidatedAdapter, ResolutionFailure> {
    let program = generate_adapter(llm, source, target, mapping, meter).await?;
    Ok(validate_adapter(program, source, target, sample)?)
}

#[derive(Default)]
pub struct Resolver {
    mappings: SingleFlightCache<HashPair, CacheEntry>,
    adapters: SingleFlightCache<HashPair, ValidatedAdapter>,
}

impl Resolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cached mapping and adapter for `pair`, if any.
    pub fn entry(&self, pair: &HashPair) -> Option<CacheEntry> {
        self.mappings.get(pair).map(|mut e| {
            e.adapter = self.adapters.get(pair);
            e
        })
    }

    pub fn clear(&self) {
        self.mappings.clear();
        self.adapters.clear();
    }

    async fn mapping(
        &self,
        llm: &LlmClient,
        route: &RouteConfig,
        report: &MismatchReport,
        meter: &Meter,
    ) -> Result<(SchemaMapping, bool), ResolutionFailure> {
        let (entry, computed) = self
            .mappings
            .get_or_try_compute(&route.pair(), || async {
                let mapping = generate_mapping(llm, &route.source_schema, &route.target_schema, report, meter).await?;
                Ok::<_, ResolutionFailure>(CacheEntry { mapping, adapter: None, created_at: SystemTime::now() })
            })
            .await?;
        Ok((entry.mapping, computed))
    }

    /// Runs the route's strategy on `data`.
    ///
    /// DIRECT: cached mapping, then one transform call per request.
    /// CODEGEN: cached mapping and cached validated adapter (trial-run on
    /// the first request's data), then local execution.
    pub async fn resolve(
        &self,
        route: &RouteConfig,
        data: &Value,
        report: &MismatchReport,
        llm: Option<&LlmClient>,
        meter: &Meter,
    ) -> Result<ResolutionOutcome, ResolutionFailure> {
        let llm = llm.ok_or(ResolutionFailure::LlmDisabled)?;
        let before = meter.calls();
        let (mapping, mapping_computed) = self.mapping(llm, route, report, meter).await?;
        let (output, cache_hit) = match route.strategy {
            Strategy::Direct => {
                let output =
                    transform_direct(llm, &route.source_schema, &route.target_schema, &mapping, data, meter).await?;
                (output, !mapping_computed)
            }
            Strategy::Codegen => {
                let (adapter, adapter_computed) = self
                    .adapters
                    .get_or_try_compute(&route.pair(), || {
                        compile_adapter(llm, &route.source_schema, &route.target_schema, &mapping, data, meter)
                    })
                    .await?;
                (execute_adapter(&adapter, data)?, !mapping_computed && !adapter_computed)
            }
        };
        Ok(ResolutionOutcome {
            output,
            strategy: route.strategy,
            llm_calls: meter.calls() - before,
            cache_hit,
            mapping,
        })
    }
}

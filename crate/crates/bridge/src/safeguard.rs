//! Three-tier safeguards: output validation, ensemble re-mapping, and the
//! deterministic fallback. [`run_safeguards`] always produces an output.

use futures::future::join_all;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use schemabridge_core::adapter::execute_adapter;
use schemabridge_core::fallback::fallback_transform_with;
use schemabridge_core::units::UnitRegistry;
use schemabridge_core::validate::validate_output;
use schemabridge_core::vote::{majority_vote, VoteError};
use schemabridge_core::{MismatchReport, RouteConfig, Schema, SchemaMapping, Strategy};

use crate::llm::{LlmClient, Meter};
use crate::resolve::{compile_adapter, generate_mapping, transform_direct, ResolutionFailure, ResolutionOutcome};

/// Default ensemble size.
pub const DEFAULT_ENSEMBLE_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    None,
    Ensemble,
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafeguardedResult {
    pub output: Value,
    pub tier_used: Tier,
    pub ensemble_triggered: bool,
    pub fallback_triggered: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnsembleFailure {
    #[error("no model backend is configured")]
    LlmDisabled,
    #[error(transparent)]
    Vote(#[from] VoteError),
}

/// Issues `n` concurrent mapping calls and keeps the pairs a strict
/// majority of the `n` agree on.
pub async fn ensemble_vote(
    llm: Option<&LlmClient>,
    source: &Schema,
    target: &Schema,
    report: &MismatchReport,
    n: usize,
    meter: &Meter,
) -> Result<SchemaMapping, EnsembleFailure> {
    let llm = llm.ok_or(EnsembleFailure::LlmDisabled)?;
    let n = n.max(1);
    let calls = (0..n).map(|_| generate_mapping(llm, source, target, report, meter));
    let valid: Vec<SchemaMapping> = join_all(calls)
        .await
        .into_iter()
        .filter_map(|r| r.map_err(|e| tracing::debug!(error = %e, "ensemble member rejected")).ok())
        .collect();
    let voted = majority_vote(&valid, n)?;
    Ok(voted.with_pair((source.hash(), target.hash())))
}

pub struct SafeguardContext<'a> {
    pub route: &'a RouteConfig,
    pub data: &'a Value,
    pub report: &'a MismatchReport,
    pub llm: Option<&'a LlmClient>,
    pub ensemble_size: usize,
    pub units: &'a UnitRegistry,
    pub meter: &'a Meter,
}

/// Re-runs the route's strategy with an ensemble mapping and returns the
/// output only if it passes Tier 1.
async fn tier_two(ctx: &SafeguardContext<'_>) -> Result<Value, String> {
    let route = ctx.route;
    let (source, target) = (&route.source_schema, &route.target_schema);
    let mapping = ensemble_vote(ctx.llm, source, target, ctx.report, ctx.ensemble_size, ctx.meter)
        .await
        .map_err(|e| e.to_string())?;
    let llm = ctx.llm.ok_or("no model backend is configured")?;
    let output = match route.strategy {
        Strategy::Direct => transform_direct(llm, source, target, &mapping, ctx.data, ctx.meter).await,
        Strategy::Codegen => compile_adapter(llm, source, target, &mapping, ctx.data, ctx.meter)
            .await
            .and_then(|adapter| Ok(execute_adapter(&adapter, ctx.data)?)),
    }
    .map_err(|e| e.to_string())?;
    let check = validate_output(&output, target, route.min_confidence, &mapping);
    if check.passes() {
        Ok(output)
    } else {
        Err(format!("ensemble output still invalid ({} violations)", check.violations.len()))
    }
}

/// Tier 1 on the resolution output (skipped on failure), then Tier 2, then
/// Tier 3. Reaching Tier 3 always passes through Tier 2.
pub async fn run_safeguards(
    resolution: &Result<ResolutionOutcome, ResolutionFailure>,
    ctx: &SafeguardContext<'_>,
) -> SafeguardedResult {
    let target = &ctx.route.target_schema;
    if let Ok(outcome) = resolution {
        let check = validate_output(&outcome.output, target, ctx.route.min_confidence, &outcome.mapping);
        if check.passes() {
            return SafeguardedResult {
                output: outcome.output.clone(),
                tier_used: Tier::None,
                ensemble_triggered: false,
                fallback_triggered: false,
            };
        }
        tracing::debug!(violations = check.violations.len(), confidence_ok = check.confidence_ok, "tier 1 failed");
    }
    match tier_two(ctx).await {
        Ok(output) => {
            SafeguardedResult { output, tier_used: Tier::Ensemble, ensemble_triggered: true, fallback_triggered: false }
        }
        Err(reason) => {
            tracing::debug!(%reason, "tier 2 failed; using fallback");
            SafeguardedResult {
                output: fallback_transform_with(ctx.data, &ctx.route.source_schema, target, ctx.units),
                tier_used: Tier::Fallback,
                ensemble_triggered: true,
                fallback_triggered: true,
            }
        }
    }
}

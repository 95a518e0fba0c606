//! detect → resolve → safeguard for one request body.

use std::time::Instant;

use serde_json::Value;

use schemabridge_core::units::UnitRegistry;
use schemabridge_core::{MismatchReport, RouteConfig, Strategy, TokenUsage};

use crate::detect::Detector;
use crate::llm::{LlmClient, Meter};
use crate::resolve::Resolver;
use crate::safeguard::{run_safeguards, SafeguardContext, Tier, DEFAULT_ENSEMBLE_SIZE};

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub output: Value,
    /// False when the original data is forwarded because resolution failed
    /// with safeguards off.
    pub transformed: bool,
    pub report: MismatchReport,
    pub detection_degraded: bool,
    pub strategy: Strategy,
    pub cache_hit: bool,
    pub tier_used: Tier,
    pub ensemble_triggered: bool,
    pub fallback_triggered: bool,
    /// Every model call made for this request, detection included.
    pub llm_calls: u64,
    /// Calls made by the resolution layer alone.
    pub resolve_llm_calls: u64,
    pub tokens: TokenUsage,
    pub detect_ms: f64,
    pub resolve_ms: f64,
    pub safeguard_ms: f64,
}

/// Shared per-process state: the model client and both caches.
pub struct Pipeline {
    llm: Option<LlmClient>,
    detector: Detector,
    resolver: Resolver,
    ensemble_size: usize,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

impl Pipeline {
    /// `llm = None` runs with the model disabled: structural detection
    /// only, and every eligible request resolves through the fallback.
    pub fn new(llm: Option<LlmClient>) -> Self {
        Self { llm, detector: Detector::new(), resolver: Resolver::new(), ensemble_size: DEFAULT_ENSEMBLE_SIZE }
    }

    pub fn with_ensemble_size(mut self, n: usize) -> Self {
        self.ensemble_size = n.max(1);
        self
    }

    pub fn llm(&self) -> Option<&LlmClient> {
        self.llm.as_ref()
    }

    pub fn resolver(&self) -> &Resolver {
        &self.resolver
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    pub async fn run(&self, route: &RouteConfig, data: &Value, units: &UnitRegistry) -> PipelineRun {
        let meter = Meter::new();
        let llm = self.llm.as_ref();

        let started = Instant::now();
        let detection = self.detector.detect(llm, &route.source_schema, &route.target_schema, &meter).await;
        let detect_ms = elapsed_ms(started);

        let started = Instant::now();
        let resolution = self.resolver.resolve(route, data, &detection.report, llm, &meter).await;
        let resolve_ms = elapsed_ms(started);
        if let Err(e) = &resolution {
            tracing::debug!(route = %route.id(), error = %e, "resolution failed");
        }
        let resolve_llm_calls = resolution.as_ref().map_or(0, |o| o.llm_calls);
        let cache_hit = resolution.as_ref().is_ok_and(|o| o.cache_hit);

        let started = Instant::now();
        let (output, transformed, tier_used, ensemble_triggered, fallback_triggered) = if route.safeguards_enabled {
            let ctx = SafeguardContext {
                route,
                data,
                report: &detection.report,
                llm,
                ensemble_size: self.ensemble_size,
                units,
                meter: &meter,
            };
            let guarded = run_safeguards(&resolution, &ctx).await;
            (guarded.output, true, guarded.tier_used, guarded.ensemble_triggered, guarded.fallback_triggered)
        } else {
            match resolution {
                Ok(outcome) => (outcome.output, true, Tier::None, false, false),
                Err(_) => (data.clone(), false, Tier::None, false, false),
            }
        };
        let safeguard_ms = if route.safeguards_enabled { elapsed_ms(started) } else { 0.0 };

        PipelineRun {
            output,
            transformed,
            report: detection.report,
            detection_degraded: detection.degraded,
            strategy: route.strategy,
            cache_hit,
            tier_used,
            ensemble_triggered,
            fallback_triggered,
            llm_calls: meter.calls(),
            resolve_llm_calls,
            tokens: meter.usage(),
            detect_ms,
            resolve_ms,
            safeguard_ms,
        }
    }
}

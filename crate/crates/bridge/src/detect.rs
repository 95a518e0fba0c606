//! Mismatch detection: the structural diff merged with the model's
//! semantic findings, cached per schema pair.

use schemabridge_core::contract::{ContractKind, ContractResponse};
use schemabridge_core::mismatch::{detect_structural, merge_reports};
use schemabridge_core::{HashPair, MismatchReport, Schema};

use crate::cache::SingleFlightCache;
use crate::llm::{LlmClient, LlmError, Meter, PromptKind, RequestContext};

pub(crate) fn schema_text(schema: &Schema) -> String {
    serde_json::to_string_pretty(schema.document()).unwrap_or_else(|_| schema.raw().to_owned())
}

/// Asks the model for naming and unit mismatches. Entries of other kinds,
/// or naming paths absent from the schemas, are dropped.
pub async fn detect_semantic(
    llm: &LlmClient,
    source: &Schema,
    target: &Schema,
    meter: &Meter,
) -> Result<MismatchReport, LlmError> {
    let (src_text, tgt_text) = (schema_text(source), schema_text(target));
    let prompt = llm
        .prompts()
        .render(PromptKind::DetectMismatch, &[("source_schema", &src_text), ("target_schema", &tgt_text)])?;
    let context = RequestContext::new(source, target);
    let pair = context.pair;
    let (response, _) = llm.complete_structured(ContractKind::MismatchReport, prompt, context, meter).await?;
    let ContractResponse::MismatchReport(entries) = response else {
        unreachable!("verified response matches the requested contract")
    };
    let (src_leaves, tgt_leaves) = (source.leaf_paths(), target.leaf_paths());
    let kept = entries
        .into_iter()
        .filter(|m| m.kind.is_semantic())
        .filter(|m| m.source_path.as_ref().is_none_or(|p| src_leaves.contains(p)))
        .filter(|m| m.target_path.as_ref().is_none_or(|p| tgt_leaves.contains(p)))
        .collect();
    Ok(MismatchReport::new(pair, kept))
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub report: MismatchReport,
    /// The semantic half failed; `report` holds structural findings only.
    pub degraded: bool,
    pub cache_hit: bool,
}

/// Detection with a per-pair cache. Degraded results are not cached, so
/// the next request retries the semantic call.
#[derive(Default)]
pub struct Detector {
    cache: SingleFlightCache<HashPair, MismatchReport>,
}

impl Detector {
    pub fn new() -> Self {
        Self::default()
    }

    pub async fn detect(&self, llm: Option<&LlmClient>, source: &Schema, target: &Schema, meter: &Meter) -> Detection {
        let pair = (source.hash(), target.hash());
        let result = self
            .cache
            .get_or_try_compute(&pair, || async {
                let structural = detect_structural(source, target);
                let Some(llm) = llm else { return Err(structural) };
                match detect_semantic(llm, source, target, meter).await {
                    Ok(semantic) => Ok(merge_reports(&structural, &semantic).expect("both reports share the pair")),
                    Err(e) => {
                        tracing::warn!(error = %e, "semantic detection failed; using structural findings");
                        Err(structural)
                    }
                }
            })
            .await;
        match result {
            Ok((report, computed)) => Detection { report, degraded: false, cache_hit: !computed },
            Err(report) => Detection { report, degraded: true, cache_hit: false },
        }
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }
}

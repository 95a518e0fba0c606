//! Structured-output model client.
//!
//! A backend turns a rendered prompt into a JSON body; the client adds the
//! per-profile timeout, one retry on timeouts and transport errors, local
//! contract verification and call metering.

pub mod live;
pub mod mock;
pub mod profile;
pub mod prompts;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde_json::Value;
use tokio::sync::Semaphore;

use schemabridge_core::contract::{verify_response, ContractKind, ContractResponse, ContractViolation, TokenUsage};
use schemabridge_core::{HashPair, MismatchReport, Schema, SchemaMapping};

pub use profile::ModelProfile;
pub use prompts::{PromptKind, PromptSet, RenderError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("model call timed out after {0:?}")]
    Timeout(Duration),
    #[error(transparent)]
    ContractViolation(#[from] ContractViolation),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("no mock fixture for {contract} on schema pair {pair}")]
    MissingFixture { contract: ContractKind, pair: String },
    #[error(transparent)]
    Render(#[from] RenderError),
}

impl LlmError {
    fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Timeout(_) | LlmError::Transport(_))
    }
}

/// Structured inputs travelling with a prompt. Real backends only read the
/// prompt text; the mock answers from these fields.
#[derive(Debug, Clone)]
pub struct RequestContext {
    pub pair: HashPair,
    pub source: Schema,
    pub target: Schema,
    pub report: Option<MismatchReport>,
    pub mapping: Option<SchemaMapping>,
    pub data: Option<Value>,
}

impl RequestContext {
    pub fn new(source: &Schema, target: &Schema) -> Self {
        Self {
            pair: (source.hash(), target.hash()),
            source: source.clone(),
            target: target.clone(),
            report: None,
            mapping: None,
            data: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LlmRequest {
    pub contract: ContractKind,
    pub prompt: String,
    pub context: RequestContext,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmReply {
    pub body: Value,
    pub usage: TokenUsage,
}

#[async_trait]
pub trait LlmBackend: Send + Sync {
    async fn complete(&self, profile: &ModelProfile, request: &LlmRequest) -> Result<LlmReply, LlmError>;
}

/// Calls and tokens attributed to one unit of work, usually a request.
#[derive(Debug, Default)]
pub struct Meter {
    calls: AtomicU64,
    input_tokens: AtomicU64,
    output_tokens: AtomicU64,
}

impl Meter {
    pub fn new() -> Self {
        Self::default()
    }

    fn record_call(&self) {
        self.calls.fetch_add(1, Ordering::Relaxed);
    }

    fn record_usage(&self, usage: TokenUsage) {
        self.input_tokens.fetch_add(usage.input_tokens, Ordering::Relaxed);
        self.output_tokens.fetch_add(usage.output_tokens, Ordering::Relaxed);
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn usage(&self) -> TokenUsage {
        TokenUsage::new(self.input_tokens.load(Ordering::Relaxed), self.output_tokens.load(Ordering::Relaxed))
    }
}

/// Default bound on concurrent in-flight calls per client.
pub const DEFAULT_CONCURRENCY: usize = 16;

#[derive(Clone)]
pub struct LlmClient {
    backend: Arc<dyn LlmBackend>,
    profile: ModelProfile,
    prompts: Arc<PromptSet>,
    limiter: Arc<Semaphore>,
    total: Arc<Meter>,
}

impl LlmClient {
    pub fn new(backend: Arc<dyn LlmBackend>, profile: ModelProfile, prompts: PromptSet) -> Self {
        Self::with_concurrency(backend, profile, prompts, DEFAULT_CONCURRENCY)
    }

    pub fn with_concurrency(
        backend: Arc<dyn LlmBackend>,
        profile: ModelProfile,
        prompts: PromptSet,
        limit: usize,
    ) -> Self {
        Self {
            backend,
            profile,
            prompts: Arc::new(prompts),
            limiter: Arc::new(Semaphore::new(limit.max(1))),
            total: Arc::new(Meter::new()),
        }
    }

    pub fn profile(&self) -> &ModelProfile {
        &self.profile
    }

    pub fn prompts(&self) -> &PromptSet {
        &self.prompts
    }

    /// Calls and tokens across every request made through this client.
    pub fn total(&self) -> &Meter {
        &self.total
    }

    /// Issues the call and returns a response that passed local contract
    /// verification. Timeouts and transport errors are retried once;
    /// contract violations are not.
    pub async fn complete_structured(
        &self,
        contract: ContractKind,
        prompt: String,
        context: RequestContext,
        meter: &Meter,
    ) -> Result<(ContractResponse, TokenUsage), LlmError> {
        let request = LlmRequest { contract, prompt, context };
        let timeout = Duration::from_secs(self.profile.timeout_s);
        let mut retried = false;
        loop {
            let result = {
                let _permit = self.limiter.acquire().await.map_err(|e| LlmError::Transport(e.to_string()))?;
                meter.record_call();
                self.total.record_call();
                match tokio::time::timeout(timeout, self.backend.complete(&self.profile, &request)).await {
                    Ok(result) => result,
                    Err(_) => Err(LlmError::Timeout(timeout)),
                }
            };
            match result {
                Ok(reply) => {
                    meter.record_usage(reply.usage);
                    self.total.record_usage(reply.usage);
                    let response = verify_response(contract, &reply.body)?;
                    return Ok((response, reply.usage));
                }
                Err(e) if e.is_retryable() && !retried => {
                    tracing::debug!(%contract, error = %e, "retrying model call");
                    retried = true;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Rough token estimate for backends that do not report usage.
pub fn approx_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

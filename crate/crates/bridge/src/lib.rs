//! Schema-bridging HTTP middleware.
//!
//! Requests on registered routes run through mismatch detection, model
//! backed resolution (DIRECT or CODEGEN) and the three safeguard tiers
//! before their bodies are forwarded; everything else passes through
//! untouched. The `bench` module drives the same path over scenario
//! fixtures.

pub mod bench;
pub mod cache;
pub mod config;
pub mod detect;
pub mod gateway;
pub mod llm;
pub mod monitor;
pub mod pipeline;
pub mod resolve;
pub mod safeguard;

pub use gateway::{Gateway, GatewayResponse, RecordingUpstream, ReqwestUpstream, Upstream};
pub use llm::{LlmBackend, LlmClient, ModelProfile, PromptSet};
pub use pipeline::Pipeline;
pub use schemabridge_core as core;

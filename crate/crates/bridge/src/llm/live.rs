//! OpenAI-compatible chat-completions backend.
//!
//! Credentials come from `{PROVIDER}_API_KEY`; `{PROVIDER}_BASE_URL`
//! overrides the provider's default endpoint.

use std::collections::BTreeMap;

use async_trait::async_trait;
use serde_json::Value;

use schemabridge_core::contract::TokenUsage;

use super::{approx_tokens, LlmBackend, LlmError, LlmReply, LlmRequest, ModelProfile};

pub const SYSTEM_PROMPT: &str =
    "You bridge schema mismatches between services. Answer with a single JSON object that matches the response schema.";

fn default_base_url(provider: &str) -> Option<&'static str> {
    match provider {
        "openai" => Some("https://api.openai.com/v1"),
        "xai" => Some("https://api.x.ai/v1"),
        _ => None,
    }
}

#[derive(Debug, Clone)]
struct Endpoint {
    base_url: String,
    api_key: String,
}

pub struct LiveBackend {
    http: reqwest::Client,
    endpoints: BTreeMap<String, Endpoint>,
}

impl LiveBackend {
    /// Resolves endpoints for `providers` from the environment.
    pub fn from_env<'a>(providers: impl IntoIterator<Item = &'a str>) -> Result<Self, LlmError> {
        let mut endpoints = BTreeMap::new();
        for provider in providers {
            let upper = provider.to_ascii_uppercase();
            let api_key = std::env::var(format!("{upper}_API_KEY"))
                .map_err(|_| LlmError::Transport(format!("{upper}_API_KEY is not set")))?;
            let base_url = std::env::var(format!("{upper}_BASE_URL"))
                .ok()
                .or_else(|| default_base_url(provider).map(str::to_owned))
                .ok_or_else(|| {
                    LlmError::Transport(format!("no endpoint for provider `{provider}`; set {upper}_BASE_URL"))
                })?;
            endpoints.insert(provider.to_owned(), Endpoint { base_url, api_key });
        }
        Ok(Self::with_endpoints(endpoints.into_iter().map(|(p, e)| (p, e.base_url, e.api_key))))
    }

    pub fn with_endpoints(endpoints: impl IntoIterator<Item = (String, String, String)>) -> Self {
        Self {
            http: reqwest::Client::new(),
            endpoints: endpoints
                .into_iter()
                .map(|(provider, base_url, api_key)| (provider, Endpoint { base_url, api_key }))
                .collect(),
        }
    }
}

/// Pulls the JSON object out of a chat-completions response.
pub fn parse_completion(response: &Value, prompt: &str) -> Result<LlmReply, String> {
    let content = response
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or("response has no choices[0].message.content")?;
    let body = serde_json::from_str(strip_fences(content)).unwrap_or_else(|_| Value::String(content.to_owned()));
    let usage = match response.get("usage") {
        Some(u) => TokenUsage::new(
            u.get("prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
            u.get("completion_tokens").and_then(Value::as_u64).unwrap_or(0),
        ),
        None => TokenUsage::new(approx_tokens(prompt), approx_tokens(content)),
    };
    Ok(LlmReply { body, usage })
}

fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    match t.strip_prefix("```") {
        Some(rest) => {
            let rest = rest.strip_prefix("json").unwrap_or(rest);
            rest.strip_suffix("```").unwrap_or(rest).trim()
        }
        None => t,
    }
}

#[async_trait]
impl LlmBackend for LiveBackend {
    async fn complete(&self, profile: &ModelProfile, request: &LlmRequest) -> Result<LlmReply, LlmError> {
        let endpoint = self
            .endpoints
            .get(&profile.provider)
            .ok_or_else(|| LlmError::Transport(format!("no endpoint configured for `{}`", profile.provider)))?;
        let body = profile.request_body(request.contract, SYSTEM_PROMPT, &request.prompt);
        let url = format!("{}/chat/completions", endpoint.base_url.trim_end_matches('/'));
        let response = self
            .http
            .post(url)
            .bearer_auth(&endpoint.api_key)
            .json(&body)
            .send()
            .await
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = response.status();
        let json: Value = response.json().await.map_err(|e| LlmError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(LlmError::Transport(format!("HTTP {status}: {json}")));
        }
        parse_completion(&json, &request.prompt).map_err(LlmError::Transport)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn parses_content_and_usage() {
        let r = json!({"choices": [{"message": {"content": "```json\n{\"data\": {}}\n```"}}],
                       "usage": {"prompt_tokens": 12, "completion_tokens": 3}});
        let reply = parse_completion(&r, "p").unwrap();
        assert_eq!(reply.body, json!({"data": {}}));
        assert_eq!(reply.usage, TokenUsage::new(12, 3));
    }

    #[test]
    fn non_json_content_is_kept_as_text() {
        let r = json!({"choices": [{"message": {"content": "sorry"}}]});
        let reply = parse_completion(&r, "abcd").unwrap();
        assert_eq!(reply.body, json!("sorry"));
        assert_eq!(reply.usage, TokenUsage::new(1, 2));
    }

    #[test]
    fn missing_content_is_an_error() {
        assert!(parse_completion(&json!({"choices": []}), "").is_err());
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use schemabridge_core::contract::{estimate_cost, ContractKind, TokenUsage};

/// Minimum timeout for reasoning models, in seconds.
pub const REASONING_MIN_TIMEOUT_S: u64 = 120;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    pub provider: String,
    /// Identifier sent to the provider; defaults to `name`.
    #[serde(default)]
    pub model: Option<String>,
    pub reasoning: bool,
    pub accepts_temperature: bool,
    #[serde(default)]
    pub reasoning_effort: Option<String>,
    pub timeout_s: u64,
    pub price_per_million_input_tokens: f64,
    pub price_per_million_output_tokens: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("profile `{0}`: reasoning models need a timeout of at least {REASONING_MIN_TIMEOUT_S}s")]
    ReasoningTimeout(String),
    #[error("profile `{0}`: standard models run at temperature 0.0 and must accept it")]
    TemperatureRequired(String),
    #[error("profile `{0}`: prices must be finite and non-negative")]
    Price(String),
    #[error("unknown model profile `{0}`")]
    Unknown(String),
    #[error("{0}")]
    Load(String),
}

impl ModelProfile {
    /// Zero-priced standard profile used with the mock backend.
    pub fn mock() -> Self {
        Self {
            name: "mock".into(),
            provider: "mock".into(),
            model: None,
            reasoning: false,
            accepts_temperature: true,
            reasoning_effort: None,
            timeout_s: 60,
            price_per_million_input_tokens: 0.0,
            price_per_million_output_tokens: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.reasoning && self.timeout_s < REASONING_MIN_TIMEOUT_S {
            return Err(ProfileError::ReasoningTimeout(self.name.clone()));
        }
        if !self.reasoning && !self.accepts_temperature {
            return Err(ProfileError::TemperatureRequired(self.name.clone()));
        }
        let prices = [self.price_per_million_input_tokens, self.price_per_million_output_tokens];
        if prices.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(ProfileError::Price(self.name.clone()));
        }
        Ok(())
    }

    pub fn model_id(&self) -> &str {
        self.model.as_deref().unwrap_or(&self.name)
    }

    /// 0.0 for standard models; reasoning models take no temperature.
    pub fn temperature(&self) -> Option<f64> {
        (!self.reasoning && self.accepts_temperature).then_some(0.0)
    }

    pub fn estimate_cost(&self, usage: TokenUsage) -> f64 {
        estimate_cost(usage, self.price_per_million_input_tokens, self.price_per_million_output_tokens)
    }

    /// Chat-completions request body for one structured call.
    pub fn request_body(&self, contract: ContractKind, system: &str, prompt: &str) -> Value {
        let mut body = Map::new();
        body.insert("model".into(), json!(self.model_id()));
        body.insert(
            "messages".into(),
            json!([{"role": "system", "content": system}, {"role": "user", "content": prompt}]),
        );
        body.insert(
            "response_format".into(),
            json!({"type": "json_schema", "json_schema": {
                "name": contract.as_str(), "schema": contract.response_schema(), "strict": false
            }}),
        );
        if let Some(t) = self.temperature() {
            body.insert("temperature".into(), json!(t));
        }
        if let Some(effort) = &self.reasoning_effort {
            body.insert("reasoning_effort".into(), json!(effort));
        }
        Value::Object(body)
    }
}

#[derive(Debug, Deserialize)]
struct ProfilesDoc {
    profiles: Vec<ModelProfile>,
}

/// Reads `{"profiles":[...]}` and validates every entry.
pub fn load_profiles(path: &Path) -> Result<Vec<ModelProfile>, ProfileError> {
    let text = std::fs::read_to_string(path).map_err(|e| ProfileError::Load(format!("{}: {e}", path.display())))?;
    parse_profiles(&text)
}

pub fn parse_profiles(text: &str) -> Result<Vec<ModelProfile>, ProfileError> {
    let doc: ProfilesDoc = serde_json::from_str(text).map_err(|e| ProfileError::Load(e.to_string()))?;
    for p in &doc.profiles {
        p.validate()?;
    }
    Ok(doc.profiles)
}

pub fn find_profile(profiles: &[ModelProfile], name: &str) -> Result<ModelProfile, ProfileError> {
    profiles.iter().find(|p| p.name == name).cloned().ok_or_else(|| ProfileError::Unknown(name.into()))
}

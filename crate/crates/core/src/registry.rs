//! Route configuration and the schema registry.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::schema::{HashPair, Schema};
use crate::units::{UnitConversion, UnitRegistry};

/// Confidence threshold applied when a route does not set one.
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.7;

/// Methods whose JSON bodies are eligible for transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Post,
    Put,
    Patch,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Post, Method::Put, Method::Patch];

    /// Case-insensitive; `None` for methods that never carry a rewritable body.
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "POST" => Some(Method::Post),
            "PUT" => Some(Method::Put),
            "PATCH" => Some(Method::Patch),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Post => "POST",
            Method::Put => "PUT",
            Method::Patch => "PATCH",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "DIRECT", alias = "direct")]
    Direct,
    #[serde(rename = "CODEGEN", alias = "codegen")]
    Codegen,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Direct, Strategy::Codegen];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Direct => "DIRECT",
            Strategy::Codegen => "CODEGEN",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "DIRECT" => Some(Strategy::Direct),
            "CODEGEN" => Some(Strategy::Codegen),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteConfig {
    pub path_pattern: String,
    pub methods: BTreeSet<Method>,
    pub source_schema: Schema,
    pub target_schema: Schema,
    pub source_service: String,
    /// `host:port` or base URL of the backend that receives rewritten bodies.
    pub target_service: String,
    pub strategy: Strategy,
    pub safeguards_enabled: bool,
    pub min_confidence: f64,
}

impl RouteConfig {
    pub fn new(path_pattern: &str, source_schema: Schema, target_schema: Schema, strategy: Strategy) -> Self {
        Self {
            path_pattern: path_pattern.to_string(),
            methods: Method::ALL.into_iter().collect(),
            source_schema,
            target_schema,
            source_service: String::new(),
            target_service: String::new(),
            strategy,
            safeguards_enabled: true,
            min_confidence: DEFAULT_MIN_CONFIDENCE,
        }
    }

    pub fn pair(&self) -> HashPair {
        (self.source_schema.hash(), self.target_schema.hash())
    }

    /// Stable identifier used in metrics records.
    pub fn id(&self) -> String {
        let methods: Vec<&str> = self.methods.iter().map(|m| m.as_str()).collect();
        format!("{} {}", methods.join(","), self.path_pattern)
    }

    /// `pattern` equals `path`, or is a prefix ending on a segment boundary.
    pub fn is_prefix_of(&self, path: &str) -> bool {
        pattern_prefixes(&self.path_pattern, path)
    }
}

pub(crate) fn pattern_prefixes(pattern: &str, path: &str) -> bool {
    match path.strip_prefix(pattern) {
        Some(rest) => rest.is_empty() || rest.starts_with('/') || pattern.ends_with('/'),
        None => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Location in the config document, e.g. `routes[1].source_schema`.
    pub at: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.at, self.message)
    }
}

impl core::error::Error for ConfigError {}

fn config_error(at: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { at: at.into(), message: message.into() }
}

/// Immutable after construction.
#[derive(Debug, Clone, Default)]
pub struct SchemaRegistry {
    routes: Vec<RouteConfig>,
    units: UnitRegistry,
}

impl SchemaRegistry {
    /// Rejects two routes sharing a `(path_pattern, method)` pair.
    pub fn new(routes: Vec<RouteConfig>, units: UnitRegistry) -> Result<Self, ConfigError> {
        let mut seen = BTreeSet::new();
        for (i, route) in routes.iter().enumerate() {
            if route.methods.is_empty() {
                return Err(config_error(format!("routes[{i}].methods"), "at least one method is required"));
            }
            for m in &route.methods {
                if !seen.insert((route.path_pattern.as_str(), *m)) {
                    return Err(config_error(
                        format!("routes[{i}]"),
                        format!("duplicate route {m} {}", route.path_pattern),
                    ));
                }
            }
        }
        Ok(Self { routes, units })
    }

    pub fn routes(&self) -> &[RouteConfig] {
        &self.routes
    }

    pub fn units(&self) -> &UnitRegistry {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    /// Exact pattern match first, otherwise the longest registered pattern
    /// that prefixes `path`. Only routes accepting `method` are considered.
    pub fn match_route(&self, method: &str, path: &str) -> Option<&RouteConfig> {
        let method = Method::parse(method)?;
        let candidates = self.routes.iter().filter(|r| r.methods.contains(&method));
        let mut best: Option<&RouteConfig> = None;
        for route in candidates {
            if route.path_pattern == path {
                return Some(route);
            }
            if route.is_prefix_of(path) && best.is_none_or(|b| route.path_pattern.len() > b.path_pattern.len()) {
                best = Some(route);
            }
        }
        best
    }
}

/// Free-function form of [`SchemaRegistry::match_route`].
pub fn match_route<'a>(registry: &'a SchemaRegistry, method: &str, path: &str) -> Option<&'a RouteConfig> {
    registry.match_route(method, path)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteDoc {
    path: String,
    #[serde(default)]
    methods: Option<Vec<String>>,
    source_schema: Value,
    target_schema: Value,
    #[serde(default = "default_strategy")]
    strategy: String,
    #[serde(default = "default_true")]
    safeguards: bool,
    #[serde(default)]
    source_service: String,
    #[serde(default)]
    target_service: String,
    #[serde(default)]
    min_confidence: Option<f64>,
    /// Reserved; only request-direction rewriting exists.
    #[serde(default)]
    direction: Option<String>,
}

fn default_strategy() -> String {
    "CODEGEN".into()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitDoc {
    from: String,
    to: String,
    scale: f64,
    #[serde(default)]
    offset: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryDoc {
    routes: Vec<Value>,
    #[serde(default)]
    units: Vec<Value>,
}

/// Builds a registry from a config document.
///
/// Schemas are either inline objects or strings naming a schema file;
/// `read_file` turns such a name into the file's text. All schemas are
/// parsed here, so a registry never holds an unparsed schema.
pub fn load_registry(
    document: &Value,
    read_file: &mut dyn FnMut(&str) -> Result<String, String>,
) -> Result<SchemaRegistry, ConfigError> {
    let doc: RegistryDoc = serde_json::from_value(document.clone()).map_err(|e| config_error("$", e.to_string()))?;

    let mut units = UnitRegistry::builtin();
    for (i, raw) in doc.units.into_iter().enumerate() {
        let at = format!("units[{i}]");
        let u: UnitDoc = serde_json::from_value(raw).map_err(|e| config_error(&at, e.to_string()))?;
        if !u.scale.is_finite() || u.scale == 0.0 || !u.offset.is_finite() {
            return Err(config_error(at, "scale must be finite and non-zero, offset finite"));
        }
        units.add(UnitConversion::affine(&u.from, &u.to, u.scale, u.offset));
    }

    let mut routes = Vec::with_capacity(doc.routes.len());
    for (i, raw) in doc.routes.into_iter().enumerate() {
        let at = format!("routes[{i}]");
        let r: RouteDoc = serde_json::from_value(raw).map_err(|e| config_error(&at, e.to_string()))?;
        if !r.path.starts_with('/') {
            return Err(config_error(format!("{at}.path"), "path must start with '/'"));
        }
        let methods = match r.methods {
            None => Method::ALL.into_iter().collect(),
            Some(names) => names
                .iter()
                .map(|n| {
                    Method::parse(n)
                        .ok_or_else(|| config_error(format!("{at}.methods"), format!("unsupported method `{n}`")))
                })
                .collect::<Result<BTreeSet<_>, _>>()?,
        };
        let strategy = Strategy::parse(&r.strategy)
            .ok_or_else(|| config_error(format!("{at}.strategy"), format!("unknown strategy `{}`", r.strategy)))?;
        let min_confidence = r.min_confidence.unwrap_or(DEFAULT_MIN_CONFIDENCE);
        if !(0.0..=1.0).contains(&min_confidence) {
            return Err(config_error(format!("{at}.min_confidence"), "must lie in [0, 1]"));
        }
        if let Some(direction) = &r.direction {
            if direction != "request" {
                return Err(config_error(format!("{at}.direction"), "only `request` is supported"));
            }
        }
        let source_schema = load_schema(&r.source_schema, &format!("{at}.source_schema"), read_file)?;
        let target_schema = load_schema(&r.target_schema, &format!("{at}.target_schema"), read_file)?;
        routes.push(RouteConfig {
            path_pattern: r.path,
            methods,
            source_schema,
            target_schema,
            source_service: r.source_service,
            target_service: r.target_service,
            strategy,
            safeguards_enabled: r.safeguards,
            min_confidence,
        });
    }
    SchemaRegistry::new(routes, units)
}

fn load_schema(
    spec: &Value,
    at: &str,
    read_file: &mut dyn FnMut(&str) -> Result<String, String>,
) -> Result<Schema, ConfigError> {
    match spec {
        Value::Object(_) => Schema::from_value(spec.clone()).map_err(|e| config_error(at, e.to_string())),
        Value::String(file) => {
            let text = read_file(file).map_err(|e| config_error(at, format!("{file}: {e}")))?;
            Schema::parse(&text).map_err(|e| config_error(at, format!("{file}: {e}")))
        }
        _ => Err(config_error(at, "expected an inline schema object or a file name")),
    }
}

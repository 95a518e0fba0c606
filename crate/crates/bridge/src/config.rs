//! Registry config files on disk.

use std::path::Path;

use schemabridge_core::registry::{load_registry, ConfigError};
use schemabridge_core::SchemaRegistry;

/// Loads a registry document. Schema file names resolve against the
/// config file's directory.
pub fn load_registry_file(path: &Path) -> Result<SchemaRegistry, ConfigError> {
    let at = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError { at: at.clone(), message: e.to_string() })?;
    let document = serde_json::from_str(&text).map_err(|e| ConfigError { at, message: e.to_string() })?;
    let base = path.parent().unwrap_or(Path::new("."));
    load_registry(&document, &mut |name| std::fs::read_to_string(base.join(name)).map_err(|e| format!("{name}: {e}")))
}

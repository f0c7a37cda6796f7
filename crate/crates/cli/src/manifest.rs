use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Provenance record written alongside every run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// Seconds spent in computation, excluding file I/O.
    pub wall_time: f64,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &Value, seed: u64, wall_time: f64) -> Self {
        Self {
            command: command.to_string(),
            config_hash: config_hash(config),
            seed,
            wall_time,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// SHA-256 of the compact JSON encoding with object keys sorted.
pub fn config_hash(config: &Value) -> String {
    let canonical = canonicalize(config).to_string();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn canonicalize(value: &Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k.clone(), canonicalize(v))).collect())
        }
        Value::Array(items) => Value::Array(items.iter().map(canonicalize).collect()),
        other => other.clone(),
    }
}

//! Per-request records and the JSON-lines metrics sink.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use schemabridge_core::{Strategy, TokenUsage};

use crate::safeguard::Tier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    /// The body was replaced by the pipeline's output.
    Transformed,
    /// The request was not eligible and went through untouched.
    Passthrough,
    /// Eligible, but forwarded without a successful transformation.
    Degraded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    /// Route id, or `None` for unregistered paths.
    pub route: Option<String>,
    pub method: String,
    pub path: String,
    pub timestamp_ms: u64,
    pub detect_ms: f64,
    pub resolve_ms: f64,
    pub safeguard_ms: f64,
    pub llm_calls: u64,
    pub tokens: TokenUsage,
    pub cost: f64,
    pub strategy: Option<Strategy>,
    pub tier_used: Tier,
    pub cache_hit: bool,
    pub outcome: Outcome,
    pub ensemble_triggered: bool,
    pub fallback_triggered: bool,
    pub detection_degraded: bool,
}

impl RequestRecord {
    pub fn passthrough(method: &str, path: &str) -> Self {
        Self {
            route: None,
            method: method.to_owned(),
            path: path.to_owned(),
            timestamp_ms: now_ms(),
            detect_ms: 0.0,
            resolve_ms: 0.0,
            safeguard_ms: 0.0,
            llm_calls: 0,
            tokens: TokenUsage::default(),
            cost: 0.0,
            strategy: None,
            tier_used: Tier::None,
            cache_hit: false,
            outcome: Outcome::Passthrough,
            ensemble_triggered: false,
            fallback_triggered: false,
            detection_degraded: false,
        }
    }

    pub fn total_ms(&self) -> f64 {
        self.detect_ms + self.resolve_ms + self.safeguard_ms
    }
}

pub(crate) fn now_ms() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub requests: u64,
    pub transformed: u64,
    pub passthrough: u64,
    pub degraded: u64,
    pub ensemble_triggered: u64,
    pub fallback_triggered: u64,
}

impl Counters {
    /// Share of pipeline requests (non-passthrough) that reached Tier 2.
    pub fn ensemble_rate(&self) -> f64 {
        rate(self.ensemble_triggered, self.requests - self.passthrough)
    }

    /// Share of pipeline requests (non-passthrough) that reached Tier 3.
    pub fn fallback_rate(&self) -> f64 {
        rate(self.fallback_triggered, self.requests - self.passthrough)
    }
}

fn rate(hits: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Appends one JSON line per record. Write failures are logged and never
/// propagate to the request.
#[derive(Default)]
pub struct MetricsSink {
    file: Option<Mutex<File>>,
    requests: AtomicU64,
    transformed: AtomicU64,
    passthrough: AtomicU64,
    degraded: AtomicU64,
    ensemble: AtomicU64,
    fallback: AtomicU64,
}

impl MetricsSink {
    /// Counters only.
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn to_file(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file: Some(Mutex::new(file)), ..Self::default() })
    }

    pub fn record(&self, record: &RequestRecord) {
        self.requests.fetch_add(1, Ordering::Relaxed);
        let outcome = match record.outcome {
            Outcome::Transformed => &self.transformed,
            Outcome::Passthrough => &self.passthrough,
            Outcome::Degraded => &self.degraded,
        };
        outcome.fetch_add(1, Ordering::Relaxed);
        if record.ensemble_triggered {
            self.ensemble.fetch_add(1, Ordering::Relaxed);
        }
        if record.fallback_triggered {
            self.fallback.fetch_add(1, Ordering::Relaxed);
        }
        let Some(file) = &self.file else { return };
        let line = match serde_json::to_string(record) {
            Ok(line) => line,
            Err(e) => {
                tracing::warn!(error = %e, "could not serialize request record");
                return;
            }
        };
        let mut file = file.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = writeln!(file, "{line}") {
            tracing::warn!(error = %e, "could not append request record");
        }
    }

    pub fn counters(&self) -> Counters {
        Counters {
            requests: self.requests.load(Ordering::Relaxed),
            transformed: self.transformed.load(Ordering::Relaxed),
            passthrough: self.passthrough.load(Ordering::Relaxed),
            degraded: self.degraded.load(Ordering::Relaxed),
            ensemble_triggered: self.ensemble.load(Ordering::Relaxed),
            fallback_triggered: self.fallback.load(Ordering::Relaxed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_one_line_per_record_and_counts() {
        let dir = std::env::temp_dir().join(format!("sb-metrics-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.jsonl");
        let _ = std::fs::remove_file(&path);
        let sink = MetricsSink::to_file(&path).unwrap();
        let mut r = RequestRecord::passthrough("GET", "/x");
        sink.record(&r);
        r.outcome = Outcome::Transformed;
        r.tier_used = Tier::Fallback;
        r.ensemble_triggered = true;
        r.fallback_triggered = true;
        sink.record(&r);
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let back: RequestRecord = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(back, r);
        let c = sink.counters();
        assert_eq!((c.requests, c.passthrough, c.transformed, c.fallback_triggered), (2, 1, 1, 1));
        assert_eq!(c.fallback_rate(), 1.0);
    }
}

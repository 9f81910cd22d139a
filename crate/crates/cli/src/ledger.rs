//! Run ledger: one row per check, hashed for reproducibility.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Not applicable to the configured chart.
    Skipped,
    /// The computation itself failed (cone exit, Newton, continuation).
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub status: Status,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunLedger {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub config: Value,
    pub checks: Vec<CheckRow>,
    /// SHA-256 of this ledger serialized without the field itself.
    pub ledger_hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunLedger {
    pub fn new(command: &str, config: Value) -> Self {
        let version = env!("CARGO_PKG_VERSION").to_string();
        let canonical = serde_json::to_string(&config).expect("config serializes");
        let config_hash = sha256_hex(format!("sigmak-cli {version}\n{command}\n{canonical}").as_bytes());
        Self { command: command.into(), version, config_hash, config, checks: Vec::new(), ledger_hash: String::new() }
    }

    /// Append a row; names are unique within a run.
    pub fn push(&mut self, row: CheckRow) {
        assert!(!self.checks.iter().any(|c| c.name == row.name), "duplicate check {}", row.name);
        self.checks.push(row);
    }

    /// Pass iff `residual <= tolerance` (NaN fails).
    pub fn bound(&mut self, name: impl Into<String>, residual: f64, tolerance: f64, detail: Value) {
        let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
        self.push(CheckRow { name: name.into(), status, residual: Some(residual), tolerance: Some(tolerance), detail });
    }

    pub fn flag(&mut self, name: impl Into<String>, pass: bool, detail: Value) {
        let status = if pass { Status::Pass } else { Status::Fail };
        self.push(CheckRow { name: name.into(), status, residual: None, tolerance: None, detail });
    }

    pub fn skipped(&mut self, name: impl Into<String>, reason: &str) {
        self.push(CheckRow {
            name: name.into(),
            status: Status::Skipped,
            residual: None,
            tolerance: None,
            detail: serde_json::json!({ "reason": reason }),
        });
    }

    pub fn error(&mut self, name: impl Into<String>, err: &sigmak_core::Error) {
        self.push(CheckRow {
            name: name.into(),
            status: Status::Error,
            residual: None,
            tolerance: None,
            detail: serde_json::json!({ "error": err.to_string(), "kind": format!("{err:?}") }),
        });
    }

    pub fn has(&self, status: Status) -> bool {
        self.checks.iter().any(|c| c.status == status)
    }

    /// Freeze the hash and render pretty JSON.
    pub fn finish(mut self) -> String {
        self.ledger_hash.clear();
        let body = serde_json::to_string(&self).expect("ledger serializes");
        self.ledger_hash = sha256_hex(body.as_bytes());
        serde_json::to_string_pretty(&self).expect("ledger serializes") + "\n"
    }
}

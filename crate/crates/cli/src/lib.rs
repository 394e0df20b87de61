//! Batch front end for `spsys-core`: JSON documents in, JSON reports out.

pub mod commands;
pub mod document;
pub mod expr;

use std::fmt;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use spsys_core::error::Error;

pub const DEFAULT_TOL_RANK: f64 = 1e-9;
pub const DEFAULT_TOL_MEMBER: f64 = 1e-8;
pub const DEFAULT_TOL_ISO: f64 = 1e-6;

/// `Usage` covers unreadable or malformed input (exit 2), `Domain` a
/// mathematical refusal such as an improper ideal (exit 1).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::PartialViolation(_)
            | Error::NotInFiber { .. }
            | Error::NotHomogeneous { .. }
            | Error::DegreeOneGenerator { .. }
            | Error::ImproperIdeal
            | Error::OrderExceedsKx { .. }
            | Error::OutsideVariety => CliError::Domain(msg),
            _ => CliError::Usage(msg),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub rank: f64,
    pub member: f64,
    pub iso: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: DEFAULT_TOL_RANK,
            member: DEFAULT_TOL_MEMBER,
            iso: DEFAULT_TOL_ISO,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub findings: Value,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// SHA-256 over the inputs, each prefixed with its length.
pub fn inputs_digest(inputs: &[&str]) -> String {
    let mut h = Sha256::new();
    for input in inputs {
        h.update((input.len() as u64).to_le_bytes());
        h.update(input.as_bytes());
    }
    format!("sha256:{:x}", h.finalize())
}

/// What a command produced: the report, a one-line summary for stderr, the
/// exit code and optionally a document to write.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub summary: String,
    pub exit_code: i32,
    pub document: Option<String>,
}

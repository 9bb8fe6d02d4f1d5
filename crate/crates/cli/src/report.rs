use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Everything a command produced. All fields except `meta` are identical
/// across reruns with the same config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: Value,
    pub results: Value,
    pub meta: Meta,
}

/// Run-dependent details, excluded from comparisons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub wall_time_ms: f64,
    pub threads: usize,
}

impl Report {
    pub fn emit(&self, path: Option<&Path>) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        match path {
            Some(p) => std::fs::write(p, text)
                .map_err(|e| CliError::invalid(format!("cannot write report {}: {e}", p.display()))),
            None => {
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

//! Defaults for every tunable, and the merge of config files with flags.
//!
//! Precedence: command-line flag, then the `--config` file, then the
//! constants below.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Seed used when none is given.
pub const SEED: u64 = 0;
/// Largest box grid the VC search enumerates.
pub const VC_GRID_CAP: usize = vck_core::vck::DEFAULT_GRID_CAP;
/// Dyadic height of the threshold profile for non-Boolean inputs.
pub const PROFILE_HEIGHT: u32 = 2;
/// Largest total degree accepted by the box norm.
pub const DEGREE_CAP: usize = vck_core::gowers::DEFAULT_DEGREE_CAP;
/// Dyadic height of fiber-family thresholds.
pub const FAMILY_HEIGHT: u32 = 2;
/// Substitution vertices per coordinate when none are listed.
pub const FAMILY_PARAMETERS: usize = 2;
/// Largest dyadic height the fuzziness scan tries.
pub const FUZZY_HEIGHT_CAP: u32 = 8;
/// Term budget of a decomposition.
pub const N_MAX: usize = 16;
/// Alternating least-squares sweeps per weighted fit.
pub const ALS_ITERS: usize = vck_core::adversary::DEFAULT_ALS_ITERS;
/// Parameter tuples sampled per coordinate set for the Boolean leaf pool.
pub const POOL_SAMPLES: usize = 8;
/// Sides swept by the adversary curve.
pub const SWEEP_SIDES: [usize; 3] = [2, 4, 8];
/// Patterns per side.
pub const SWEEP_TRIALS: usize = 20;
/// Pattern density.
pub const SWEEP_DENSITY: f64 = 0.5;
/// Terms allowed when scoring a pattern.
pub const SCORE_TERMS: usize = 4;
/// Restarts per score.
pub const RESTARTS: usize = vck_core::adversary::DEFAULT_RESTARTS;

/// Reads a config file as a JSON object.
pub fn load(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::invalid(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::invalid(format!("config {} is not a JSON object", path.display()))),
        Err(e) => Err(CliError::invalid(format!("config {}: {e}", path.display()))),
    }
}

/// Overlays the flags that were given on the file's keys and re-parses,
/// so unknown keys in the file are rejected by the argument type.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Map<String, Value>>) -> Result<T, CliError> {
    let Some(file) = file else {
        return Ok(serde_json::from_value(serde_json::to_value(flags)?)?);
    };
    let mut merged = file.clone();
    if let Value::Object(given) = serde_json::to_value(flags)? {
        // absent flags serialize as null and must not mask the file
        merged.extend(given.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::invalid(format!("config: {e}")))
}

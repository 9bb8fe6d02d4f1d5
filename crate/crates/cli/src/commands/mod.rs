pub mod adversary;
pub mod decompose;
pub mod fibers;
pub mod gen;
pub mod gowers;
pub mod verify;
pub mod vcdim;

use std::path::Path;

use vck_core::io::Instance;
use vck_core::MeasuredFunction;

use crate::CliError;

/// Reads an instance and selects one of its functions.
pub fn load_function(path: Option<&Path>, name: Option<&str>) -> Result<MeasuredFunction, CliError> {
    let path = path.ok_or_else(|| CliError::invalid("--input is required"))?;
    let inst = Instance::read(path).map_err(|e| with_path(e, path))?;
    Ok(inst.pick(name)?.clone())
}

/// Prefixes an error message with the offending file.
pub fn with_path(e: vck_core::Error, path: &Path) -> CliError {
    let mut err = CliError::from(e);
    err.message = format!("{}: {}", path.display(), err.message);
    err
}

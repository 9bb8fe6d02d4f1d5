use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use vck_core::io::Instance;
use vck_core::vck::ShatteringCertificate;

use super::with_path;
use crate::{config, CliError, Outcome, EXIT_INVALID};

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// Certificate JSON.
    pub certificate: Option<PathBuf>,
    /// Instance JSON.
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub function: Option<String>,
}

pub fn run(args: &VerifyArgs, file: Option<&Map<String, Value>>) -> Result<Outcome, CliError> {
    let a = config::merge(args, file)?;
    let cert_path = a.certificate.as_ref().ok_or_else(|| CliError::invalid("a certificate path is required"))?;
    let inst_path = a.instance.as_ref().ok_or_else(|| CliError::invalid("an instance path is required"))?;
    let text = std::fs::read_to_string(cert_path)
        .map_err(|e| CliError::invalid(format!("{}: {e}", cert_path.display())))?;
    let cert: ShatteringCertificate =
        serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: json: {e}", cert_path.display())))?;
    let inst = Instance::read(inst_path).map_err(|e| with_path(e, inst_path))?;
    let f = inst.pick(a.function.as_deref())?;
    let (valid, reason) = match cert.verify(f) {
        Ok(()) => (true, None),
        Err(e) => (false, Some(e.to_string())),
    };
    if let Some(r) = &reason {
        eprintln!("vck-lab: certificate rejected: {r}");
    }
    let results = json!({
        "valid": valid,
        "reason": reason,
        "box": cert.vc_box,
        "distinguished": cert.distinguished,
        "mode": cert.mode,
    });
    Ok(Outcome {
        seed: None,
        config: serde_json::to_value(&a)?,
        results,
        exit: if valid { 0 } else { EXIT_INVALID },
        stdout_taken: false,
    })
}

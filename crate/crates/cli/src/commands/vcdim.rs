use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use vck_core::vck::{vc_k, vc_k_slicewise, vc_profile, ShatterMode, VcResult};

use super::load_function;
use crate::{config, CliError, Outcome, EXIT_RESOURCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcdimArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Function to examine when the instance holds several.
    #[arg(long)]
    pub function: Option<String>,
    /// Box dimension; defaults to arity - 1. Smaller values search every
    /// (k+1)-ary fiber.
    #[arg(long)]
    pub k: Option<usize>,
    /// Threshold pair; without it Boolean inputs use relation semantics and
    /// other inputs get a dyadic profile.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Witness coordinate; defaults to the last.
    #[arg(long)]
    pub distinguished: Option<usize>,
    /// Largest box grid searched.
    #[arg(long)]
    pub cap: Option<usize>,
    /// Dyadic height of the profile.
    #[arg(long)]
    pub profile_height: Option<u32>,
    /// Standard output format; the JSON report still goes to --report.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write the certificate here.
    #[arg(long)]
    pub cert_out: Option<PathBuf>,
}

fn print_csv(header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(header).map_err(|e| CliError::invalid(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::invalid(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: &VcdimArgs, file: Option<&Map<String, Value>>) -> Result<Outcome, CliError> {
    let mut a = config::merge(args, file)?;
    let f = load_function(a.input.as_deref(), a.function.as_deref())?;
    let arity = f.arity();
    if arity < 2 {
        return Err(CliError::invalid(format!("VC_k needs arity at least 2, got {arity}")));
    }
    let k = *a.k.get_or_insert(arity - 1);
    let cap = *a.cap.get_or_insert(config::VC_GRID_CAP);
    let format = *a.format.get_or_insert(Format::Json);
    let mode = match (a.r, a.s) {
        (Some(r), Some(s)) => Some(ShatterMode::threshold(r, s)?),
        (None, None) if f.is_boolean() => Some(ShatterMode::Relation),
        (None, None) => None,
        _ => return Err(CliError::invalid("--r and --s go together")),
    };
    let slicewise = k + 1 < arity;
    if !slicewise || mode.is_none() {
        a.distinguished.get_or_insert(arity - 1);
    }

    let (results, complete, rows) = match mode {
        None => {
            if slicewise {
                return Err(CliError::invalid("profiles need k = arity - 1; pass --r and --s"));
            }
            let t = *a.profile_height.get_or_insert(config::PROFILE_HEIGHT);
            let profile = vc_profile(&f, a.distinguished.unwrap(), t, cap)?;
            let complete = profile.iter().all(|p| p.complete);
            let rows = profile
                .iter()
                .map(|p| vec![p.r.to_string(), p.s.to_string(), p.dimension.to_string(), p.complete.to_string()])
                .collect();
            (json!({ "k": k, "mode": "profile", "complete": complete, "profile": profile }), complete, (vec!["r", "s", "dimension", "complete"], rows))
        }
        Some(mode) => {
            let res: VcResult = if slicewise {
                vc_k_slicewise(&f, k, mode, cap)?
            } else {
                vc_k(&f, a.distinguished.unwrap(), mode, cap)?
            };
            if let (Some(path), Some(c)) = (&a.cert_out, &res.certificate) {
                std::fs::write(path, serde_json::to_string_pretty(c)? + "\n")?;
            }
            let row = vec![vec![res.dimension.to_string(), res.complete.to_string()]];
            let complete = res.complete;
            (
                json!({
                    "k": k,
                    "mode": mode,
                    "slicewise": slicewise,
                    "dimension": res.dimension,
                    "complete": res.complete,
                    "certificate": res.certificate,
                }),
                complete,
                (vec!["dimension", "complete"], row),
            )
        }
    };
    if !complete {
        eprintln!("vck-lab: grid cap {cap} stopped the search; the dimension is only a lower bound");
    }
    if format == Format::Csv {
        print_csv(&rows.0, rows.1)?;
    }
    Ok(Outcome {
        seed: None,
        config: serde_json::to_value(&a)?,
        results,
        exit: if complete { 0 } else { EXIT_RESOURCE },
        stdout_taken: format == Format::Csv,
    })
}

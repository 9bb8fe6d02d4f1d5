use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use vck_core::gowers::box_norm;

use super::load_function;
use crate::{config, CliError, Outcome};

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GowersArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub function: Option<String>,
    /// Expected degree vector (coordinates per part), e.g. `1,1,1`.
    #[arg(long, value_delimiter = ',')]
    pub signature: Option<Vec<usize>>,
    /// Subtract this constant first, giving the norm of `f - c`.
    #[arg(long)]
    pub center: Option<f64>,
    #[arg(long)]
    pub degree_cap: Option<usize>,
}

pub fn run(args: &GowersArgs, file: Option<&Map<String, Value>>) -> Result<Outcome, CliError> {
    let mut a = config::merge(args, file)?;
    let f = load_function(a.input.as_deref(), a.function.as_deref())?;
    let cap = *a.degree_cap.get_or_insert(config::DEGREE_CAP);
    let parts = f.space().num_parts();
    let degrees = f.signature().degree_vector(parts);
    if let Some(want) = &a.signature {
        let mut want = want.clone();
        want.resize(parts.max(want.len()), 0);
        let mut have = degrees.clone();
        have.resize(want.len(), 0);
        if want != have {
            return Err(CliError::invalid(format!(
                "function has degree vector {degrees:?}, expected {:?}",
                a.signature.as_ref().unwrap()
            )));
        }
    }
    let g = match a.center {
        Some(c) => f.centered(c)?,
        None => f.clone(),
    };
    let norm = box_norm(&g, cap)?;
    let results = json!({
        "degree_vector": degrees,
        "integral": g.integral(),
        "box_norm": norm,
    });
    Ok(Outcome { seed: None, config: serde_json::to_value(&a)?, results, exit: 0, stdout_taken: false })
}

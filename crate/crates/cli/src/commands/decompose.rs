use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use vck_core::decomp::{fit_boolean_cylinders, fit_weighted_cylinders, FiberPool};
use vck_core::Relation;

use super::load_function;
use crate::{config, CliError, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    Weighted,
    Boolean,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub function: Option<String>,
    /// Largest factor arity.
    #[arg(long)]
    pub k: Option<usize>,
    /// Term budget (weighted) or leaf budget (boolean).
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<FitMode>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub als_iters: Option<usize>,
    /// Fibers sampled per coordinate set for the Boolean leaf pool.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Also write the decomposition document here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &DecomposeArgs, file: Option<&Map<String, Value>>) -> Result<Outcome, CliError> {
    let mut a = config::merge(args, file)?;
    let f = load_function(a.input.as_deref(), a.function.as_deref())?;
    let k = a.k.ok_or_else(|| CliError::invalid("--k is required"))?;
    let n_max = *a.n_max.get_or_insert(config::N_MAX);
    let seed = *a.seed.get_or_insert(config::SEED);
    let mode = *a.mode.get_or_insert(FitMode::Weighted);
    let (fit, doc) = match mode {
        FitMode::Weighted => {
            let iters = *a.als_iters.get_or_insert(config::ALS_ITERS);
            let (dec, fit) = fit_weighted_cylinders(&f, k, n_max, iters, seed, None)?;
            (fit, serde_json::to_value(dec.to_doc())?)
        }
        FitMode::Boolean => {
            if !f.is_boolean() {
                return Err(CliError::invalid("boolean mode needs a {0,1}-valued function"));
            }
            let samples = *a.samples.get_or_insert(config::POOL_SAMPLES);
            let mask: Vec<bool> = f.values().iter().map(|&v| v >= 0.5).collect();
            let e = Relation::from_mask(f.grid().clone(), &mask)?;
            let (expr, fit) = fit_boolean_cylinders(&e, k, n_max, &FiberPool::Sampled { samples_per_set: samples }, seed)?;
            (fit, serde_json::to_value(expr.to_doc())?)
        }
    };
    if let Some(path) = &a.out {
        std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    }
    let results = json!({ "fit": fit, "decomposition": doc });
    Ok(Outcome { seed: Some(seed), config: serde_json::to_value(&a)?, results, exit: 0, stdout_taken: false })
}

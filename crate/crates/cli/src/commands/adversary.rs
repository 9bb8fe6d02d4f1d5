use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use vck_core::adversary::{quasirandomness_curve, SweepConfig};

use crate::{config, CliError, Outcome};

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryArgs {
    #[arg(long)]
    pub k: Option<usize>,
    /// Pattern sides, e.g. `2,4,8`.
    #[arg(long, value_delimiter = ',')]
    pub d: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Pattern density.
    #[arg(long)]
    pub p: Option<f64>,
    /// Terms allowed when scoring each pattern.
    #[arg(long)]
    pub score_terms: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub als_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV table of the curve.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &AdversaryArgs, file: Option<&Map<String, Value>>) -> Result<Outcome, CliError> {
    let mut a = config::merge(args, file)?;
    let cfg = SweepConfig {
        k: *a.k.get_or_insert(1),
        d_values: a.d.get_or_insert_with(|| config::SWEEP_SIDES.to_vec()).clone(),
        trials: *a.trials.get_or_insert(config::SWEEP_TRIALS),
        p: *a.p.get_or_insert(config::SWEEP_DENSITY),
        score_terms: *a.score_terms.get_or_insert(config::SCORE_TERMS),
        restarts: *a.restarts.get_or_insert(config::RESTARTS),
        als_iters: *a.als_iters.get_or_insert(config::ALS_ITERS),
        seed: *a.seed.get_or_insert(config::SEED),
    };
    let rows = quasirandomness_curve(&cfg)?;
    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        for r in &rows {
            w.serialize(r).map_err(|e| CliError::invalid(e.to_string()))?;
        }
        w.flush()?;
    }
    let results = json!({ "curve": rows });
    Ok(Outcome { seed: Some(cfg.seed), config: serde_json::to_value(&a)?, results, exit: 0, stdout_taken: false })
}

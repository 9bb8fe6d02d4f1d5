use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use vck_core::gen::{boolean_of_lower_arity, membership_gadget, parity_triple, quasirandom};
use vck_core::io::Instance;
use vck_core::{Grid, MeasuredFunction, PartiteSpace, Signature};

use crate::{config, CliError, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    Membership,
    Boolcomb,
    Parity,
    Quasirandom,
}

/// Generator parameters; which ones apply depends on the kind.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_prime: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
}

/// Parses `key=value` pairs separated by commas; sizes are written `5x5x5`.
fn parse_params(text: &str) -> Result<GenParams, String> {
    let mut map = Map::new();
    for pair in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (key, value) = pair.split_once('=').ok_or_else(|| format!("expected key=value, got {pair:?}"))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let v = if key == "sizes" {
            let sizes = value
                .split('x')
                .map(|s| s.parse::<usize>().map_err(|e| format!("sizes: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            json!(sizes)
        } else {
            serde_json::from_str::<Value>(value).map_err(|_| format!("{key}: {value:?} is not a number"))?
        };
        map.insert(key, v);
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| e.to_string())
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Option<GenKind>,
    /// Comma-separated `key=value` pairs, e.g. `d=2,k=1` or `sizes=5x5,p=0.3`.
    #[arg(long, value_parser = parse_params)]
    pub params: Option<GenParams>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Instance file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn summary(inst: &Instance) -> Value {
    inst.functions
        .iter()
        .map(|(name, f)| {
            json!({
                "name": name,
                "signature": f.signature(),
                "shape": f.grid().shape(),
                "integral": f.integral(),
            })
        })
        .collect()
}

pub fn run(args: &GenArgs, file: Option<&Map<String, Value>>) -> Result<Outcome, CliError> {
    let mut a = config::merge(args, file)?;
    let kind = a.kind.ok_or_else(|| CliError::invalid("--kind is required"))?;
    let out = a.out.clone().ok_or_else(|| CliError::invalid("--out is required"))?;
    let seed = *a.seed.get_or_insert(config::SEED);
    let mut p = a.params.take().unwrap_or_default();
    let mut extra = Value::Null;
    let inst = match kind {
        GenKind::Membership => {
            let d = *p.d.get_or_insert(2);
            let k = *p.k.get_or_insert(1);
            let f = membership_gadget(d, k)?;
            Instance::new(f.space().clone()).with("E", &f)?
        }
        GenKind::Boolcomb => {
            let k_prime = *p.k_prime.get_or_insert(3);
            let k = *p.k.get_or_insert(1);
            let m = *p.m.get_or_insert(3);
            let sizes = p.sizes.get_or_insert_with(|| vec![5; k_prime]).clone();
            let comb = boolean_of_lower_arity(k_prime, k, m, &sizes, seed)?;
            let mut inst = Instance::new(comb.relation.grid().space().clone()).with("E", comb.relation.function())?;
            for leaf in &comb.expr.leaves {
                inst = inst.with(leaf.name.clone(), leaf.relation.function())?;
            }
            extra = json!({ "expression": comb.expr.expr, "leaves": comb.expr.leaves.len() });
            inst
        }
        GenKind::Parity => {
            let n = *p.n.get_or_insert(5);
            let t = parity_triple(n, seed)?;
            Instance::new(t.e.grid().space().clone())
                .with("E", t.e.function())?
                .with("F", t.f.function())?
                .with("G", t.g.function())?
                .with("H", t.h.function())?
        }
        GenKind::Quasirandom => {
            let sizes = p.sizes.get_or_insert_with(|| vec![5, 5]).clone();
            let density = *p.p.get_or_insert(0.5);
            let space = PartiteSpace::uniform(&sizes)?;
            let grid = Grid::new(space.clone(), Signature((0..sizes.len()).collect()))?;
            let e: MeasuredFunction = quasirandom(&grid, density, seed)?.into_function();
            Instance::new(space).with("E", &e)?
        }
    };
    inst.write(&out)?;
    a.params = Some(p);
    let mut results = json!({ "instance": out, "functions": summary(&inst) });
    if !extra.is_null() {
        results["generator"] = extra;
    }
    Ok(Outcome { seed: Some(seed), config: serde_json::to_value(&a)?, results, exit: 0, stdout_taken: false })
}

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use vck_core::fibalg::{atoms, fiber_family, fuzziness, project_simple, FiberFamilySpec};
use vck_core::space::fiber;

use super::load_function;
use crate::{config, CliError, Outcome};

/// Vertex lists per coordinate, written `0,1;0,2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexLists(pub Vec<Vec<usize>>);

fn parse_lists(text: &str) -> Result<VertexLists, String> {
    text.split(';')
        .map(|part| {
            part.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<usize>().map_err(|e| format!("{s:?}: {e}")))
                .collect()
        })
        .collect::<Result<_, _>>()
        .map(VertexLists)
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FibersArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub function: Option<String>,
    /// Dyadic height of the level-set thresholds.
    #[arg(long)]
    pub height: Option<u32>,
    /// Vertices of the last coordinate whose fibers generate the algebra.
    #[arg(long, value_delimiter = ',')]
    pub anchors: Option<Vec<usize>>,
    /// Substitution vertices for each of the other coordinates.
    #[arg(long, value_parser = parse_lists)]
    pub params: Option<VertexLists>,
    /// Run the fuzziness scan at this tolerance on each anchor's fiber.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub height_cap: Option<u32>,
}

pub fn run(args: &FibersArgs, file: Option<&Map<String, Value>>) -> Result<Outcome, CliError> {
    let mut a = config::merge(args, file)?;
    let f = load_function(a.input.as_deref(), a.function.as_deref())?;
    let arity = f.arity();
    if arity < 2 {
        return Err(CliError::invalid("fiber families need arity at least 2"));
    }
    let k = arity - 1;
    let shape = f.grid().shape().to_vec();
    let height = *a.height.get_or_insert(config::FAMILY_HEIGHT);
    let anchors = a.anchors.get_or_insert_with(|| vec![0]).clone();
    let params = a
        .params
        .get_or_insert_with(|| VertexLists(shape[..k].iter().map(|&n| (0..n.min(config::FAMILY_PARAMETERS)).collect()).collect()))
        .clone();
    if a.eps.is_some() {
        a.height_cap.get_or_insert(config::FUZZY_HEIGHT_CAP);
    }
    let spec = FiberFamilySpec { height, anchors: anchors.clone(), parameters: params.0, index_sets: None };
    let gens = fiber_family(&f, &spec)?;
    let base = f.grid().sub_grid(&(0..k).collect::<Vec<_>>())?;
    let partition = atoms(&base, &gens)?;
    let per_anchor = anchors
        .iter()
        .map(|&b| {
            let slice = fiber(&f, &[(k, b)])?;
            let proj = project_simple(&slice, &partition, None)?;
            let fuzzy = match a.eps {
                Some(eps) => Some(fuzziness(&slice, &partition, eps, a.height_cap.unwrap())?),
                None => None,
            };
            Ok(json!({ "anchor": b, "projection_error": proj.error, "fuzziness": fuzzy }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let results = json!({
        "family_size": gens.len(),
        "generators": gens.iter().map(|g| json!({ "name": g.name, "measure": g.relation.measure() })).collect::<Vec<_>>(),
        "num_cells": partition.num_cells(),
        "partition": partition.to_doc(),
        "anchors": per_anchor,
    });
    Ok(Outcome { seed: None, config: serde_json::to_value(&a)?, results, exit: 0, stdout_taken: false })
}

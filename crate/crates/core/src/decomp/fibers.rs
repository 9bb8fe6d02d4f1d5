//! Approximating every top fiber by simple functions over fiber algebras.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FitReport;
use crate::error::{invalid, Result};
use crate::fibalg::{atoms, fiber_family, project_simple, FiberFamilySpec, NamedRelation};
use crate::numeric;
use crate::space::{fiber, level_set, LevelMode, MeasuredFunction};

/// Outcome of [`approx_by_fibers`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberApproximation {
    /// Chosen vertices of the last coordinate, in order of selection.
    pub anchors: Vec<usize>,
    pub max_error: f64,
    /// Whether `max_error <= eps`; false means the budget ran out first.
    pub met: bool,
    /// One report per vertex of the last coordinate: projection error,
    /// number of cells, and the fiber's own constant-fit error.
    pub per_fiber: Vec<FitReport>,
}

/// Generators for fiber `x` given the anchors: level sets of each anchor's
/// whole fiber, plus the substituted fiber family at the anchors and `x`.
fn generators(
    f: &MeasuredFunction,
    template: &FiberFamilySpec,
    anchors: &[usize],
    x: usize,
) -> Result<Vec<NamedRelation>> {
    let k = f.arity() - 1;
    let mut out = Vec::new();
    for &a in anchors {
        let fa = fiber(f, &[(k, a)])?;
        for q in numeric::dyadic_grid(template.height) {
            out.push(NamedRelation {
                name: format!("q={q};b={a}"),
                relation: level_set(&fa, LevelMode::Below(q))?,
            });
        }
    }
    if k >= 2 {
        let mut all = anchors.to_vec();
        if !all.contains(&x) {
            all.push(x);
        }
        let spec = FiberFamilySpec { anchors: all, ..template.clone() };
        out.extend(fiber_family(f, &spec)?);
    }
    Ok(out)
}

fn fiber_report(f: &MeasuredFunction, template: &FiberFamilySpec, anchors: &[usize], x: usize, seed: u64) -> Result<FitReport> {
    let k = f.arity() - 1;
    let fx = fiber(f, &[(k, x)])?;
    let part = atoms(fx.grid(), &generators(f, template, anchors, x)?)?;
    let proj = project_simple(&fx, &part, None)?;
    let mean = fx.integral().clamp(0.0, 1.0);
    let baseline = fx.l2_distance(&MeasuredFunction::constant(fx.grid().clone(), mean)?)?;
    Ok(FitReport {
        error: proj.error,
        n_terms: part.num_cells(),
        iterations: anchors.len(),
        seed,
        baseline,
    })
}

/// Greedy choice of anchors `x_1, ..., x_N` in the last coordinate so that
/// every fiber `f(., x)` is within `eps` in L² of its projection onto the
/// algebra generated by the dyadic level sets of the anchor fibers and the
/// substituted fiber family at the anchors and `x`.
///
/// Starts from no anchors and repeatedly adds the worst-approximated vertex
/// (lowest index on ties) until every fiber is within `eps` or `budget`
/// anchors are in use. Only `height`, `parameters` and `index_sets` are read
/// from `template`.
pub fn approx_by_fibers(
    f: &MeasuredFunction,
    eps: f64,
    budget: usize,
    template: &FiberFamilySpec,
    seed: u64,
) -> Result<FiberApproximation> {
    let arity = f.arity();
    if arity < 2 {
        return Err(invalid!("fiber approximation needs arity at least 2"));
    }
    if !(eps >= 0.0) {
        return Err(invalid!("eps must be non-negative"));
    }
    if template.height == 0 {
        return Err(invalid!("dyadic height must be at least 1"));
    }
    let k = arity - 1;
    if k >= 2 && template.parameters.len() != k {
        return Err(invalid!("template needs one parameter list per coordinate ({k})"));
    }
    let n = f.grid().shape()[k];
    let mut anchors: Vec<usize> = Vec::new();
    loop {
        let reports: Vec<FitReport> = (0..n)
            .into_par_iter()
            .map(|x| fiber_report(f, template, &anchors, x, seed))
            .collect::<Result<_>>()?;
        let (worst, max_error) = reports
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (x, r)| if r.error > acc.1 { (x, r.error) } else { acc });
        let met = max_error <= eps;
        if met || anchors.len() >= budget || anchors.contains(&worst) {
            return Ok(FiberApproximation { anchors, max_error, met, per_fiber: reports });
        }
        anchors.push(worst);
    }
}

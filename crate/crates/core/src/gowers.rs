//! Partite box norms, dual functions and cylinder correlations.
//!
//! The box norm of `f` on `V^n̄` integrates, over the doubled space, the
//! product of `f` at all `2^n` vertices of a combinatorial cube:
//! `raw = Σ_{x⁰, x¹} μ(x⁰) μ(x¹) Π_{α ∈ {0,1}^n} f(x^α)` and
//! `norm = raw^{1/2^n}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{self, CompensatedSum};
use crate::space::{cylinder_extend, pointwise_product, Grid, MeasuredFunction, Relation, Signature};

/// Default cap on the total degree `n`.
pub const DEFAULT_DEGREE_CAP: usize = 6;
/// Raw values in `(-RAW_TOL, 0)` are clamped to 0; anything lower is an error.
pub const RAW_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxNormReport {
    pub signature: Signature,
    /// Total degree `n`, the arity of the signature.
    pub degree: usize,
    pub raw: f64,
    pub norm: f64,
    /// Set when a slightly negative raw value was clamped to 0.
    pub clamped: bool,
}

/// Flat offsets of `x^α` for every `α`, given the two halves.
struct Cube {
    strides: Vec<usize>,
    n: usize,
}

impl Cube {
    fn new(grid: &Grid) -> Self {
        Cube {
            strides: grid.strides().to_vec(),
            n: grid.arity(),
        }
    }

    /// Product of `vals` over cube vertices `α` in `alphas`.
    #[inline]
    fn product(&self, vals: &[f64], x0: &[usize], x1: &[usize], alphas: std::ops::Range<usize>) -> f64 {
        let mut prod = 1.0;
        for a in alphas {
            let mut idx = 0;
            for j in 0..self.n {
                let v = if a >> (self.n - 1 - j) & 1 == 1 { x1[j] } else { x0[j] };
                idx += v * self.strides[j];
            }
            prod *= vals[idx];
            if prod == 0.0 {
                break;
            }
        }
        prod
    }
}

fn check_degree(grid: &Grid, cap: usize) -> Result<()> {
    if grid.arity() > cap {
        return Err(Error::ResourceLimit(format!(
            "box norm of degree {} exceeds the cap {cap}",
            grid.arity()
        )));
    }
    Ok(())
}

/// Σ over `x¹` of `μ(x¹) Π_{α ∈ alphas} f(x^α)` for every `x⁰`, in row-major
/// order of `x⁰`.
fn inner_sums(f: &MeasuredFunction, alphas: std::ops::Range<usize>) -> Vec<f64> {
    let grid = f.grid();
    let cube = Cube::new(grid);
    let masses = grid.point_masses();
    let points: Vec<Vec<usize>> = (0..grid.len()).map(|i| grid.point(i)).collect();
    let vals = f.values();
    (0..grid.len())
        .into_par_iter()
        .map(|i0| {
            let x0 = &points[i0];
            let mut acc = CompensatedSum::new();
            for (i1, x1) in points.iter().enumerate() {
                if masses[i1] == 0.0 {
                    continue;
                }
                acc.add(masses[i1] * cube.product(vals, x0, x1, alphas.clone()));
            }
            acc.value()
        })
        .collect()
}

pub fn box_norm(f: &MeasuredFunction, degree_cap: usize) -> Result<BoxNormReport> {
    let grid = f.grid();
    check_degree(grid, degree_cap)?;
    let n = grid.arity();
    let masses = grid.point_masses();
    // the α = 0 factor is f(x⁰) itself
    let inner = inner_sums(f, 1..1 << n);
    let mut raw = numeric::csum(
        inner
            .iter()
            .zip(&masses)
            .zip(f.values())
            .map(|((d, w), v)| w * v * d),
    );
    let mut clamped = false;
    if raw < 0.0 {
        if raw < -RAW_TOL {
            return Err(Error::NumericalFailure(format!(
                "box norm integral is {raw:e}, below -{RAW_TOL:e}"
            )));
        }
        raw = 0.0;
        clamped = true;
    }
    Ok(BoxNormReport {
        signature: grid.signature().clone(),
        degree: n,
        raw,
        norm: raw.powf(1.0 / (1u64 << n) as f64),
        clamped,
    })
}

/// `D(f)(x⁰) = Σ_{x¹} μ(x¹) Π_{α ≠ 0} f(x^α)`, returned as a signed function.
pub fn dual_function(f: &MeasuredFunction, degree_cap: usize) -> Result<MeasuredFunction> {
    let grid = f.grid();
    check_degree(grid, degree_cap)?;
    let inner = inner_sums(f, 1..1 << grid.arity());
    MeasuredFunction::new_signed(grid.clone(), inner)
}

/// A set depending only on the coordinates `positions` of the target grid.
#[derive(Clone, Debug)]
pub struct Cylinder {
    pub positions: Vec<usize>,
    pub relation: Relation,
}

/// `|∫ f · Π χ_B dμ|` for cylinder sets `B`, each on a strict subset of the
/// coordinates.
pub fn cylinder_correlation(f: &MeasuredFunction, cylinders: &[Cylinder]) -> Result<f64> {
    let product = cylinder_product(f, cylinders)?;
    Ok(product.integral().abs())
}

/// `f · Π χ_B` on the grid of `f`.
pub fn cylinder_product(f: &MeasuredFunction, cylinders: &[Cylinder]) -> Result<MeasuredFunction> {
    let grid = f.grid();
    let mut factors = vec![f.clone()];
    for c in cylinders {
        let mut sorted = c.positions.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != c.positions.len() {
            return Err(invalid!("cylinder positions {:?} repeat", c.positions));
        }
        if c.positions.len() >= grid.arity() {
            return Err(invalid!(
                "cylinder on positions {:?} depends on every coordinate",
                c.positions
            ));
        }
        factors.push(cylinder_extend(c.relation.function(), &c.positions, grid)?);
    }
    let refs: Vec<&MeasuredFunction> = factors.iter().collect();
    pointwise_product(&refs)
}

//! Finitely generated Boolean algebras of fiber sets, their atoms, and
//! conditional expectations onto them.

mod diagnostics;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::{self, CompensatedSum};
use crate::space::{Grid, MeasuredFunction, Relation};

pub use diagnostics::{
    fuzziness, round_to_union, smooth_indicator, threshold_witness, Fuzziness, FuzzyWitness,
    SmoothIndicator, DEFAULT_FUZZ_HEIGHT_CAP,
};

/// Parameters of a family of level-set fibers of a `(k+1)`-ary function whose
/// last coordinate is distinguished.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberFamilySpec {
    /// Dyadic height: thresholds run over `{ j / 2^t }`.
    pub height: u32,
    /// Vertices of the distinguished part.
    pub anchors: Vec<usize>,
    /// Substitution vertices for each of the first `k` coordinates.
    pub parameters: Vec<Vec<usize>>,
    /// Coordinates to substitute; defaults to every non-empty proper subset
    /// of `0..k`, by size and then lexicographically.
    #[serde(default)]
    pub index_sets: Option<Vec<Vec<usize>>>,
}

/// All non-empty subsets of `0..k` of size at most `k-1`.
pub fn proper_index_sets(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 1..k {
        let mut c: Vec<usize> = (0..size).collect();
        loop {
            out.push(c.clone());
            let mut i = size;
            let mut advanced = false;
            while i > 0 {
                i -= 1;
                if c[i] < k - size + i {
                    c[i] += 1;
                    for j in i + 1..size {
                        c[j] = c[j - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }
    out
}

impl FiberFamilySpec {
    fn resolved_index_sets(&self, k: usize) -> Result<Vec<Vec<usize>>> {
        let sets = match &self.index_sets {
            Some(s) => s.clone(),
            None => proper_index_sets(k),
        };
        for s in &sets {
            if s.is_empty() || s.len() >= k.max(1) {
                return Err(invalid!("index set {s:?} must be non-empty with fewer than {k} coordinates"));
            }
            if s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|&i| i >= k) {
                return Err(invalid!("index set {s:?} must be strictly increasing within 0..{k}"));
            }
        }
        Ok(sets)
    }

    fn validate(&self, grid: &Grid) -> Result<usize> {
        let arity = grid.arity();
        if arity < 2 {
            return Err(invalid!("fiber families need arity at least 2"));
        }
        let k = arity - 1;
        if self.height == 0 {
            return Err(invalid!("dyadic height must be at least 1"));
        }
        if self.anchors.is_empty() {
            return Err(invalid!("fiber family needs at least one anchor"));
        }
        if let Some(&b) = self.anchors.iter().find(|&&b| b >= grid.shape()[k]) {
            return Err(invalid!("anchor {b} out of range"));
        }
        if self.parameters.len() != k {
            return Err(invalid!(
                "need one parameter list per coordinate ({k}), got {}",
                self.parameters.len()
            ));
        }
        for (i, w) in self.parameters.iter().enumerate() {
            if let Some(&a) = w.iter().find(|&&a| a >= grid.shape()[i]) {
                return Err(invalid!("parameter {a} out of range at coordinate {i}"));
            }
        }
        Ok(k)
    }

    /// Number of relations [`fiber_family`] produces.
    pub fn family_size(&self, k: usize) -> Result<usize> {
        let q = (1usize << self.height) + 1;
        let per_anchor: usize = self
            .resolved_index_sets(k)?
            .iter()
            .map(|s| s.iter().map(|&i| self.parameters[i].len()).product::<usize>())
            .sum();
        Ok(q * per_anchor * self.anchors.len())
    }
}

/// A named generator set.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedRelation {
    pub name: String,
    pub relation: Relation,
}

pub(crate) fn fmt_list(xs: &[usize]) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Level sets `{ x : f(x with x_i := a_i for i in I, b) < q }` on the first
/// `k` coordinates, one per threshold, index set, parameter choice and anchor.
pub fn fiber_family(f: &MeasuredFunction, spec: &FiberFamilySpec) -> Result<Vec<NamedRelation>> {
    let grid = f.grid();
    let k = spec.validate(grid)?;
    let index_sets = spec.resolved_index_sets(k)?;
    let base = grid.sub_grid(&(0..k).collect::<Vec<_>>())?;
    let qs = numeric::dyadic_grid(spec.height);
    let strides = grid.strides();
    let mut out = Vec::new();
    for &b in &spec.anchors {
        for set in &index_sets {
            let sizes: Vec<usize> = set.iter().map(|&i| spec.parameters[i].len()).collect();
            if sizes.iter().any(|&s| s == 0) {
                continue;
            }
            let mut choice = vec![0usize; set.len()];
            loop {
                let subst: Vec<usize> = set
                    .iter()
                    .zip(&choice)
                    .map(|(&i, &c)| spec.parameters[i][c])
                    .collect();
                // values of the substituted fiber at every base point
                let mut vals = vec![0.0; base.len()];
                base.for_each_point(|flat, x| {
                    let mut idx = b * strides[k];
                    let mut s = 0;
                    for (i, &xi) in x.iter().enumerate() {
                        let v = if s < set.len() && set[s] == i {
                            s += 1;
                            subst[s - 1]
                        } else {
                            xi
                        };
                        idx += v * strides[i];
                    }
                    vals[flat] = f.values()[idx];
                });
                for &q in &qs {
                    let mask: Vec<bool> = vals.iter().map(|&v| v < q).collect();
                    out.push(NamedRelation {
                        name: format!("q={q};I={};a={};b={b}", fmt_list(set), fmt_list(&subst)),
                        relation: Relation::from_mask(base.clone(), &mask)?,
                    });
                }
                let mut j = choice.len();
                let mut done = true;
                while j > 0 {
                    j -= 1;
                    choice[j] += 1;
                    if choice[j] < sizes[j] {
                        done = false;
                        break;
                    }
                    choice[j] = 0;
                }
                if done {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// The atoms of the Boolean algebra generated by some sets.
#[derive(Clone, Debug)]
pub struct AtomPartition {
    grid: Grid,
    cell_of: Vec<usize>,
    num_cells: usize,
    provenance: Vec<String>,
}

/// Serializable view of a partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomPartitionDoc {
    pub generators: Vec<String>,
    /// Flat row-major point indices, one list per cell.
    pub cells: Vec<Vec<usize>>,
}

impl AtomPartition {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn cell_of(&self) -> &[usize] {
        &self.cell_of
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    /// Cells as flat point lists, ordered by their smallest point.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_cells];
        for (p, &c) in self.cell_of.iter().enumerate() {
            out[c].push(p);
        }
        out
    }

    pub fn cell_masses(&self) -> Vec<f64> {
        let masses = self.grid.point_masses();
        let mut acc = vec![CompensatedSum::new(); self.num_cells];
        for (p, &c) in self.cell_of.iter().enumerate() {
            acc[c].add(masses[p]);
        }
        acc.iter().map(CompensatedSum::value).collect()
    }

    /// μ-weighted mean of `values` on each cell (0 on null cells).
    pub fn cell_means(&self, values: &[f64]) -> Vec<f64> {
        let masses = self.grid.point_masses();
        let mut num = vec![CompensatedSum::new(); self.num_cells];
        let mut den = vec![CompensatedSum::new(); self.num_cells];
        for (p, &c) in self.cell_of.iter().enumerate() {
            num[c].add(masses[p] * values[p]);
            den[c].add(masses[p]);
        }
        num.iter()
            .zip(&den)
            .map(|(n, d)| {
                let d = d.value();
                if d > 0.0 {
                    (n.value() / d).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Whether `r` is a union of cells.
    pub fn is_measurable(&self, r: &Relation) -> bool {
        let mut state: Vec<Option<bool>> = vec![None; self.num_cells];
        (0..self.grid.len()).all(|p| {
            let inside = r.contains_flat(p);
            let slot = &mut state[self.cell_of[p]];
            *slot.get_or_insert(inside) == inside
        })
    }

    pub fn to_doc(&self) -> AtomPartitionDoc {
        AtomPartitionDoc {
            generators: self.provenance.clone(),
            cells: self.cells(),
        }
    }
}

/// Atoms generated by `generators` on `grid`. With no generators the whole
/// grid is a single cell.
pub fn atoms(grid: &Grid, generators: &[NamedRelation]) -> Result<AtomPartition> {
    let mut labels = vec![0usize; grid.len()];
    let mut count = 1;
    for g in generators {
        if !g.relation.grid().same_as(grid) {
            return Err(invalid!("generator {:?} lives on a different grid", g.name));
        }
        let mut next: HashMap<(usize, bool), usize> = HashMap::new();
        for (p, l) in labels.iter_mut().enumerate() {
            let key = (*l, g.relation.contains_flat(p));
            let n = next.len();
            *l = *next.entry(key).or_insert(n);
        }
        count = next.len();
    }
    // relabel by first occurrence so cells are ordered by their least point
    let mut order = vec![usize::MAX; count.max(1)];
    let mut seen = 0;
    for l in labels.iter_mut() {
        if order[*l] == usize::MAX {
            order[*l] = seen;
            seen += 1;
        }
        *l = order[*l];
    }
    Ok(AtomPartition {
        grid: grid.clone(),
        cell_of: labels,
        num_cells: seen,
        provenance: generators.iter().map(|g| g.name.clone()).collect(),
    })
}

/// Projection onto cell-constant functions.
#[derive(Clone, Debug)]
pub struct Projection {
    pub approximant: MeasuredFunction,
    /// Value on each cell.
    pub coefficients: Vec<f64>,
    /// `‖f - g‖_{L²(μ)}`.
    pub error: f64,
}

/// Replaces `f` by its μ-weighted mean on every cell. If `round_height` is
/// set, cell values are rounded to the dyadic grid of that height.
pub fn project_simple(
    f: &MeasuredFunction,
    partition: &AtomPartition,
    round_height: Option<u32>,
) -> Result<Projection> {
    if !f.grid().same_as(partition.grid()) {
        return Err(invalid!("partition and function live on different grids"));
    }
    let mut coefficients = partition.cell_means(f.values());
    if let Some(t) = round_height {
        for c in &mut coefficients {
            *c = numeric::round_dyadic(*c, t);
        }
    }
    let approximant = MeasuredFunction::new(
        f.grid().clone(),
        partition.cell_of.iter().map(|&c| coefficients[c]).collect(),
    )?;
    let error = f.l2_distance(&approximant)?;
    Ok(Projection {
        approximant,
        coefficients,
        error,
    })
}

//! Greedy decision-tree fits of relations by low-arity fibers.

use std::collections::HashSet;

use rand::seq::index::sample;
use rayon::prelude::*;

use super::{BooleanCylinderExpr, CylinderLeaf, Expr, FitReport};
use crate::error::{invalid, Result};
use crate::fibalg::{fmt_list, proper_index_sets};
use crate::rng::{self, STREAM_POOL};
use crate::space::{fiber, Relation};

/// Where candidate leaves come from.
#[derive(Clone, Debug, PartialEq)]
pub enum FiberPool {
    /// Fibers of the target: for every coordinate set `I` with `|I| <= k`,
    /// the remaining coordinates are fixed at up to `samples_per_set`
    /// parameter tuples drawn from the seed.
    Sampled { samples_per_set: usize },
    /// Caller-supplied leaves.
    Explicit(Vec<CylinderLeaf>),
}

/// Every non-empty coordinate set of size at most `k` among `0..n`.
fn small_index_sets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = proper_index_sets(n);
    if k >= n {
        out.push((0..n).collect());
    }
    out.retain(|s| s.len() <= k);
    out
}

/// Fibers of `e` on coordinate sets of size at most `k`.
pub fn sampled_pool(e: &Relation, k: usize, samples_per_set: usize, seed: u64) -> Result<Vec<CylinderLeaf>> {
    let grid = e.grid();
    let n = grid.arity();
    let mut rng = rng::stream(seed, STREAM_POOL);
    let mut out = Vec::new();
    for set in small_index_sets(n, k) {
        let rest: Vec<usize> = (0..n).filter(|p| !set.contains(p)).collect();
        let rest_shape: Vec<usize> = rest.iter().map(|&p| grid.shape()[p]).collect();
        let total: usize = rest_shape.iter().product();
        let mut picks = if samples_per_set >= total {
            (0..total).collect()
        } else {
            sample(&mut rng, total, samples_per_set).into_vec()
        };
        picks.sort_unstable();
        for pick in picks {
            let mut fixed = Vec::with_capacity(rest.len());
            let mut r = pick;
            for (&p, &s) in rest.iter().zip(&rest_shape).rev() {
                fixed.push((p, r % s));
                r /= s;
            }
            fixed.reverse();
            let sub = fiber(e.function(), &fixed)?;
            let mask: Vec<bool> = sub.values().iter().map(|&v| v >= 0.5).collect();
            let params: Vec<usize> = fixed.iter().map(|&(_, v)| v).collect();
            out.push(CylinderLeaf {
                name: format!("I={};a={}", fmt_list(&set), fmt_list(&params)),
                positions: set.clone(),
                relation: Relation::from_mask(sub.grid().clone(), &mask)?,
            });
        }
    }
    Ok(out)
}

struct Region {
    points: Vec<usize>,
    used: Vec<usize>,
    mass_in: f64,
    mass_out: f64,
}

impl Region {
    fn error(&self) -> f64 {
        self.mass_in.min(self.mass_out)
    }
}

enum Node {
    Label(bool),
    Split { leaf: usize, yes: Box<Node>, no: Box<Node> },
}

/// One candidate split and what it would leave behind.
struct Candidate {
    region: usize,
    leaf: usize,
    gain: f64,
    yes: (f64, f64),
    no: (f64, f64),
}

/// Greedy decision-tree fit of `e` by cylinder leaves.
///
/// Each step splits one region of the current tree on one pool leaf not yet
/// used along that branch, choosing the split with the largest drop in
/// `μ(E △ F)`; ties go to the lowest leaf index, then the lowest region. When
/// no split helps but error remains, the worst region is split on its
/// lowest-index non-constant leaf, so parity-like targets still resolve.
/// At most `n_max` distinct leaves are used. The report's `n_terms` is the
/// number of distinct leaves and `iterations` the number of splits.
pub fn fit_boolean_cylinders(
    e: &Relation,
    k: usize,
    n_max: usize,
    pool: &FiberPool,
    seed: u64,
) -> Result<(BooleanCylinderExpr, FitReport)> {
    let grid = e.grid();
    if grid.arity() <= k {
        return Err(invalid!("target arity {} must exceed k = {k}", grid.arity()));
    }
    let leaves = match pool {
        FiberPool::Sampled { samples_per_set } => sampled_pool(e, k, *samples_per_set, seed)?,
        FiberPool::Explicit(v) => v.clone(),
    };
    if leaves.is_empty() {
        return Err(invalid!("empty fiber pool"));
    }
    if let Some(l) = leaves.iter().find(|l| l.positions.len() > k) {
        return Err(invalid!("pool leaf {} has arity above {k}", l.name));
    }
    let masks: Vec<Vec<bool>> = leaves.iter().map(|l| l.extend(grid)).collect::<Result<_>>()?;
    let mass = grid.point_masses();
    let member = e.mask();

    let tally = |pts: &[usize]| {
        let (mut a, mut b) = (crate::numeric::CompensatedSum::new(), crate::numeric::CompensatedSum::new());
        for &p in pts {
            if member[p] { a.add(mass[p]) } else { b.add(mass[p]) }
        }
        (a.value(), b.value())
    };
    let all: Vec<usize> = (0..grid.len()).collect();
    let (mi, mo) = tally(&all);
    let baseline = mi.min(mo);

    // tree stored as region ids; node paths rebuilt at the end
    let mut regions = vec![Region { points: all, used: vec![], mass_in: mi, mass_out: mo }];
    let mut splits: Vec<(usize, usize, usize, usize)> = Vec::new(); // (region, leaf, yes, no)
    let mut live = vec![true];
    let mut distinct: Vec<usize> = Vec::new();

    loop {
        let error: f64 = regions.iter().zip(&live).filter(|(_, &l)| l).map(|(r, _)| r.error()).sum();
        if error <= 0.0 {
            break;
        }
        let cands: Vec<Candidate> = (0..regions.len())
            .filter(|&r| live[r] && regions[r].error() > 0.0)
            .flat_map(|r| (0..leaves.len()).map(move |l| (r, l)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .filter_map(|(r, l)| {
                let reg = &regions[r];
                if reg.used.contains(&l) || (distinct.len() >= n_max && !distinct.contains(&l)) {
                    return None;
                }
                let (yes_pts, no_pts): (Vec<usize>, Vec<usize>) = reg.points.iter().partition(|&&p| masks[l][p]);
                if yes_pts.is_empty() || no_pts.is_empty() {
                    return None;
                }
                let yes = tally(&yes_pts);
                let no = tally(&no_pts);
                let gain = reg.error() - yes.0.min(yes.1) - no.0.min(no.1);
                Some(Candidate { region: r, leaf: l, gain, yes, no })
            })
            .collect();
        if cands.is_empty() {
            break;
        }
        let best = cands
            .iter()
            .filter(|c| c.gain > 1e-15)
            .min_by(|a, b| {
                b.gain
                    .partial_cmp(&a.gain)
                    .unwrap()
                    .then(a.leaf.cmp(&b.leaf))
                    .then(a.region.cmp(&b.region))
            })
            .or_else(|| {
                let worst = cands
                    .iter()
                    .map(|c| c.region)
                    .max_by(|&a, &b| {
                        regions[a].error().partial_cmp(&regions[b].error()).unwrap().then(b.cmp(&a))
                    })?;
                cands.iter().filter(|c| c.region == worst).min_by_key(|c| c.leaf)
            })
            .expect("non-empty candidates");
        let (r, l) = (best.region, best.leaf);
        let (yes_pts, no_pts): (Vec<usize>, Vec<usize>) = regions[r].points.iter().partition(|&&p| masks[l][p]);
        let mut used = regions[r].used.clone();
        used.push(l);
        let (yes_id, no_id) = (regions.len(), regions.len() + 1);
        regions.push(Region { points: yes_pts, used: used.clone(), mass_in: best.yes.0, mass_out: best.yes.1 });
        regions.push(Region { points: no_pts, used, mass_in: best.no.0, mass_out: best.no.1 });
        live[r] = false;
        live.extend([true, true]);
        splits.push((r, l, yes_id, no_id));
        if !distinct.contains(&l) {
            distinct.push(l);
        }
    }

    fn build(id: usize, regions: &[Region], splits: &[(usize, usize, usize, usize)]) -> Node {
        match splits.iter().find(|s| s.0 == id) {
            Some(&(_, leaf, yes, no)) => Node::Split {
                leaf,
                yes: Box::new(build(yes, regions, splits)),
                no: Box::new(build(no, regions, splits)),
            },
            None => Node::Label(regions[id].mass_in > regions[id].mass_out),
        }
    }
    let tree = build(0, &regions, &splits);

    // keep only the leaves the tree uses, in order of first use
    let mut order: Vec<usize> = Vec::new();
    let mut seen = HashSet::new();
    for &(_, l, _, _) in &splits {
        if seen.insert(l) {
            order.push(l);
        }
    }
    fn to_expr(n: &Node, order: &[usize]) -> Expr {
        match n {
            Node::Label(b) => Expr::Const(*b),
            Node::Split { leaf, yes, no } => {
                let idx = order.iter().position(|x| x == leaf).unwrap();
                Expr::ite(Expr::Leaf(idx), to_expr(yes, order), to_expr(no, order))
            }
        }
    }
    let expr = to_expr(&tree, &order);
    let used_leaves: Vec<CylinderLeaf> = order.iter().map(|&l| leaves[l].clone()).collect();
    let fitted = BooleanCylinderExpr::new(grid.clone(), used_leaves, expr)?;
    let error = fitted.sym_diff(e)?;
    Ok((
        fitted,
        FitReport {
            error,
            n_terms: order.len(),
            iterations: splits.len(),
            seed,
            baseline,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{boolean_of_lower_arity, quasirandom};
    use crate::space::{Grid, PartiteSpace, Signature};

    fn grid(sizes: &[usize]) -> Grid {
        Grid::new(PartiteSpace::uniform(sizes).unwrap(), Signature::new((0..sizes.len()).collect())).unwrap()
    }

    #[test]
    fn index_sets_up_to_k() {
        assert_eq!(small_index_sets(3, 1), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(small_index_sets(2, 2), vec![vec![0], vec![1], vec![0, 1]]);
    }

    #[test]
    fn single_cylinder_is_fit_exactly() {
        let g = grid(&[4, 5, 3]);
        // depends on coordinate 1 only
        let e = Relation::from_fn(g, |p| p[1] % 2 == 0 || p[1] == 3);
        let (fit, rep) = fit_boolean_cylinders(&e, 1, 4, &FiberPool::Sampled { samples_per_set: 2 }, 3).unwrap();
        assert_eq!(rep.error, 0.0);
        assert_eq!(rep.n_terms, 1);
        assert_eq!(fit.to_relation().unwrap(), e);
    }

    #[test]
    fn intersection_of_two_cylinders_with_explicit_pool() {
        let g = grid(&[4, 4, 4]);
        let a = Relation::from_fn(g.sub_grid(&[0, 1]).unwrap(), |p| (p[0] + p[1]) % 3 == 0);
        let b = Relation::from_fn(g.sub_grid(&[1, 2]).unwrap(), |p| p[0] != p[1]);
        let e = Relation::from_fn(g.clone(), |p| a.contains(&[p[0], p[1]]) && b.contains(&[p[1], p[2]]));
        let pool = vec![
            CylinderLeaf { name: "a".into(), positions: vec![0, 1], relation: a },
            CylinderLeaf { name: "b".into(), positions: vec![1, 2], relation: b },
        ];
        let (fit, rep) = fit_boolean_cylinders(&e, 2, 4, &FiberPool::Explicit(pool), 0).unwrap();
        assert_eq!(rep.error, 0.0);
        assert!(rep.n_terms <= 2);
        // exhaustive check
        g.for_each_point(|_, p| assert_eq!(fit.evaluate(p).unwrap(), e.contains(p)));
    }

    #[test]
    fn closure_on_generated_combinations() {
        for seed in 0..20 {
            let m = 1 + (seed as usize % 3);
            let bc = boolean_of_lower_arity(3, 1, m, &[5, 5, 5], seed).unwrap();
            let pool = FiberPool::Explicit(bc.expr.leaves.clone());
            let (_, rep) = fit_boolean_cylinders(&bc.relation, 1, 8, &pool, seed).unwrap();
            assert_eq!(rep.error, 0.0, "seed {seed}");
            assert!(rep.n_terms <= 1 << m);
            assert!(rep.error <= rep.baseline);
        }
    }

    #[test]
    fn quasirandom_stays_near_baseline() {
        let g = grid(&[6, 6, 6]);
        let e = quasirandom(&g, 0.5, 11).unwrap();
        let (_, rep) = fit_boolean_cylinders(&e, 1, 6, &FiberPool::Sampled { samples_per_set: 3 }, 11).unwrap();
        assert!(rep.error <= rep.baseline);
        assert!(rep.error > 0.5 * rep.baseline, "{rep:?}");
    }

    #[test]
    fn empty_pool_rejected() {
        let g = grid(&[2, 2]);
        let e = Relation::full(g);
        assert!(fit_boolean_cylinders(&e, 1, 3, &FiberPool::Explicit(vec![]), 0).is_err());
    }
}

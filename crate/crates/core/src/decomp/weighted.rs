//! Projected alternating least squares for weighted cylinder decompositions.

use rand::Rng;

use super::{CylinderDecomposition, CylinderTerm, Factor, FitReport};
use crate::error::{invalid, Error, Result};
use crate::fibalg::proper_index_sets;
use crate::numeric::CompensatedSum;
use crate::rng::{self, STREAM_WEIGHTED_FIT};
use crate::space::{Grid, MeasuredFunction};

const EXACT_TOL: f64 = 1e-12;
const MONOTONE_TOL: f64 = 1e-9;

struct FactorState {
    positions: Vec<usize>,
    /// Cell of every grid point.
    cell: Vec<usize>,
    values: Vec<f64>,
}

struct TermState {
    gamma: f64,
    factors: Vec<FactorState>,
}

impl TermState {
    fn product_at(&self, p: usize, skip: Option<usize>) -> f64 {
        let mut prod = 1.0;
        for (j, f) in self.factors.iter().enumerate() {
            if Some(j) != skip {
                prod *= f.values[f.cell[p]];
            }
        }
        prod
    }
}

struct Fit<'a> {
    grid: &'a Grid,
    target: &'a [f64],
    mass: Vec<f64>,
    terms: Vec<TermState>,
    approx: Vec<f64>,
}

impl<'a> Fit<'a> {
    fn cells(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.grid.strides();
        let shape = self.grid.shape();
        let sub_shape: Vec<usize> = positions.iter().map(|&p| shape[p]).collect();
        (0..self.grid.len())
            .map(|flat| {
                positions.iter().zip(&sub_shape).fold(0, |acc, (&p, &s)| acc * s + (flat / strides[p]) % shape[p])
            })
            .collect()
    }

    fn factor(&self, positions: Vec<usize>, values: Vec<f64>) -> FactorState {
        FactorState { cell: self.cells(&positions), positions, values }
    }

    fn recompute(&mut self) {
        for (p, a) in self.approx.iter_mut().enumerate() {
            let mut s = CompensatedSum::new();
            for t in &self.terms {
                s.add(t.gamma * t.product_at(p, None));
            }
            *a = s.value();
        }
    }

    fn error(&self) -> f64 {
        let s: CompensatedSum = (0..self.approx.len())
            .map(|p| {
                let d = self.target[p] - self.approx[p];
                self.mass[p] * d * d
            })
            .collect();
        s.value().max(0.0).sqrt()
    }

    fn term_values(&self, i: usize) -> Vec<f64> {
        let t = &self.terms[i];
        (0..self.approx.len()).map(|p| t.gamma * t.product_at(p, None)).collect()
    }

    /// Swaps the old contribution of term `i` for its current one.
    fn replace_term(&mut self, old: &[f64], i: usize) {
        let new = self.term_values(i);
        for ((a, o), n) in self.approx.iter_mut().zip(old).zip(&new) {
            *a += n - o;
        }
    }

    /// Exact clipped minimization over one factor of one term.
    fn update_factor(&mut self, i: usize, j: usize) {
        let gamma = self.terms[i].gamma;
        if gamma <= 0.0 {
            return;
        }
        let old = self.term_values(i);
        let n = self.terms[i].factors[j].values.len();
        let mut num = vec![CompensatedSum::new(); n];
        let mut den = vec![CompensatedSum::new(); n];
        let term = &self.terms[i];
        for p in 0..self.approx.len() {
            let w = self.mass[p];
            if w == 0.0 {
                continue;
            }
            let others = term.product_at(p, Some(j));
            let r = self.target[p] - (self.approx[p] - old[p]);
            let c = term.factors[j].cell[p];
            num[c].add(w * r * others);
            den[c].add(w * others * others);
        }
        let vals = &mut self.terms[i].factors[j].values;
        for c in 0..n {
            let d = den[c].value() * gamma;
            if d > 0.0 {
                vals[c] = (num[c].value() / d).clamp(0.0, 1.0);
            }
        }
        self.replace_term(&old, i);
    }

    fn update_gamma(&mut self, i: usize) {
        let old = self.term_values(i);
        let (mut num, mut den) = (CompensatedSum::new(), CompensatedSum::new());
        let term = &self.terms[i];
        for p in 0..self.approx.len() {
            let w = self.mass[p];
            if w == 0.0 {
                continue;
            }
            let q = term.product_at(p, None);
            let r = self.target[p] - (self.approx[p] - old[p]);
            num.add(w * r * q);
            den.add(w * q * q);
        }
        if den.value() > 0.0 {
            self.terms[i].gamma = (num.value() / den.value()).clamp(0.0, 1.0);
        }
        self.replace_term(&old, i);
    }

    /// One sweep over every factor and coefficient.
    fn sweep(&mut self) {
        for i in 0..self.terms.len() {
            for j in 0..self.terms[i].factors.len() {
                self.update_factor(i, j);
            }
            self.update_gamma(i);
        }
        // clear drift from the incremental updates
        self.recompute();
    }

    /// Alternating sweeps until `iters` or stagnation; errors on an
    /// increasing step.
    fn refine(&mut self, iters: usize, sweeps: &mut usize) -> Result<f64> {
        let mut err = self.error();
        for _ in 0..iters {
            if err <= EXACT_TOL {
                break;
            }
            self.sweep();
            *sweeps += 1;
            let next = self.error();
            if next > err + MONOTONE_TOL {
                return Err(Error::NumericalFailure(format!(
                    "alternating step raised the error from {err} to {next}"
                )));
            }
            let stalled = err - next <= EXACT_TOL;
            err = next.min(err);
            if stalled {
                break;
            }
        }
        Ok(err)
    }

    fn to_decomposition(&self, k: usize) -> Result<CylinderDecomposition> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let factors = t
                    .factors
                    .iter()
                    .map(|f| {
                        Ok(Factor {
                            values: MeasuredFunction::new(self.grid.sub_grid(&f.positions)?, f.values.clone())?,
                            positions: f.positions.clone(),
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(CylinderTerm { gamma: t.gamma, factors })
            })
            .collect::<Result<_>>()?;
        CylinderDecomposition::new(self.grid.clone(), k, terms)
    }
}

/// Coordinate sets carrying the factors of a fresh term: every set of size
/// `min(k, arity)`. Smaller sets add nothing since their factors can be
/// absorbed into a larger one.
fn term_index_sets(arity: usize, k: usize) -> Vec<Vec<usize>> {
    if k >= arity {
        return vec![(0..arity).collect()];
    }
    let mut sets = proper_index_sets(arity);
    sets.retain(|s| s.len() == k);
    sets
}

/// Greedy residual fit of `f` by at most `n_max` terms
/// `γ_i Π_I f_I(x_I)` with factors on coordinate sets of size `k`.
///
/// The first term starts from the constant fit. Each later term starts from
/// the fibers of the positive residual through a point drawn from the seed
/// with probability proportional to that residual. After every addition all
/// factors and coefficients are refined by up to `als_iters` sweeps of exact
/// per-cell least squares clipped to `[0,1]`. With `init`, fitting resumes
/// from the given decomposition.
pub fn fit_weighted_cylinders(
    f: &MeasuredFunction,
    k: usize,
    n_max: usize,
    als_iters: usize,
    seed: u64,
    init: Option<&CylinderDecomposition>,
) -> Result<(CylinderDecomposition, FitReport)> {
    let grid = f.grid();
    let arity = grid.arity();
    if k == 0 || arity <= k {
        return Err(invalid!("need 1 <= k < arity (k={k}, arity={arity})"));
    }
    if n_max == 0 {
        return Err(invalid!("term budget must be at least 1"));
    }
    if f.is_signed() {
        return Err(invalid!("cylinder fits need a [0,1]-valued target"));
    }
    let mut fit = Fit {
        grid,
        target: f.values(),
        mass: grid.point_masses(),
        terms: Vec::new(),
        approx: vec![0.0; grid.len()],
    };
    let mean = f.integral().clamp(0.0, 1.0);
    let baseline = f.l2_distance(&MeasuredFunction::constant(grid.clone(), mean)?)?;
    let sets = term_index_sets(arity, k);
    let constant_term = |fit: &Fit| TermState {
        gamma: mean,
        factors: sets
            .iter()
            .map(|s| {
                let n = s.iter().map(|&p| grid.shape()[p]).product();
                fit.factor(s.clone(), vec![1.0; n])
            })
            .collect(),
    };

    if let Some(d) = init {
        if !d.grid.same_as(grid) {
            return Err(invalid!("initial decomposition lives on a different grid"));
        }
        if d.k > k || d.len() > n_max {
            return Err(invalid!("initial decomposition exceeds the arity or term budget"));
        }
        for t in &d.terms {
            let factors = t.factors.iter().map(|fa| fit.factor(fa.positions.clone(), fa.values.values().to_vec())).collect();
            fit.terms.push(TermState { gamma: t.gamma, factors });
        }
    } else {
        let t = constant_term(&fit);
        fit.terms.push(t);
    }
    fit.recompute();

    let mut rng = rng::stream(seed, STREAM_WEIGHTED_FIT);
    let mut sweeps = 0;
    let mut err = fit.refine(als_iters, &mut sweeps)?;
    while fit.terms.len() < n_max && err > EXACT_TOL {
        // draw an anchor point proportionally to the positive residual
        let weights: Vec<f64> = (0..grid.len())
            .map(|p| fit.mass[p] * (fit.target[p] - fit.approx[p]).max(0.0))
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut u = rng.gen::<f64>() * total;
        let mut anchor = weights.iter().rposition(|&w| w > 0.0).unwrap();
        for (p, &w) in weights.iter().enumerate() {
            if u < w {
                anchor = p;
                break;
            }
            u -= w;
        }
        let anchor_point = grid.point(anchor);
        let factors = sets
            .iter()
            .map(|s| {
                let sub = grid.sub_grid(s).expect("valid positions");
                let mut vals = vec![0.0; sub.len()];
                let mut x = anchor_point.clone();
                sub.for_each_point(|c, y| {
                    for (&p, &v) in s.iter().zip(y) {
                        x[p] = v;
                    }
                    let flat = grid.flat_index(&x);
                    vals[c] = (fit.target[flat] - fit.approx[flat]).max(0.0);
                });
                let top = vals.iter().cloned().fold(0.0, f64::max);
                if top > 0.0 {
                    vals.iter_mut().for_each(|v| *v /= top);
                } else {
                    vals.iter_mut().for_each(|v| *v = 1.0);
                }
                fit.factor(s.clone(), vals)
            })
            .collect();
        fit.terms.push(TermState { gamma: 0.0, factors });
        let last = fit.terms.len() - 1;
        fit.update_gamma(last);
        let added = fit.error();
        if added > err + MONOTONE_TOL {
            return Err(Error::NumericalFailure(format!(
                "adding a term raised the error from {err} to {added}"
            )));
        }
        err = fit.refine(als_iters, &mut sweeps)?.min(added);
    }

    let mut decomposition = fit.to_decomposition(k)?;
    let mut error = decomposition.l2_error(f)?;
    if error > baseline {
        // only reachable from a poor initial decomposition
        let mut fallback = Fit { terms: Vec::new(), approx: vec![0.0; grid.len()], ..fit };
        let t = constant_term(&fallback);
        fallback.terms.push(t);
        fallback.recompute();
        decomposition = fallback.to_decomposition(k)?;
        error = decomposition.l2_error(f)?;
    }
    let report = FitReport {
        error,
        n_terms: decomposition.len(),
        iterations: sweeps,
        seed,
        baseline,
    };
    Ok((decomposition, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::parity_triple;
    use crate::space::{PartiteSpace, Signature};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(sizes: &[usize]) -> Grid {
        Grid::new(PartiteSpace::uniform(sizes).unwrap(), Signature::new((0..sizes.len()).collect())).unwrap()
    }

    #[test]
    fn constant_target_needs_one_term() {
        let g = grid(&[3, 4]);
        let f = MeasuredFunction::constant(g, 0.3).unwrap();
        let (d, rep) = fit_weighted_cylinders(&f, 1, 5, 20, 0, None).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d.terms[0].gamma - 0.3).abs() < 1e-15);
        assert!(d.terms[0].factors.iter().all(|fa| fa.values.values().iter().all(|&v| v == 1.0)));
        assert!(rep.error <= 1e-12);
    }

    #[test]
    fn rank_one_target_recovered() {
        let g = grid(&[4, 5]);
        let u = [0.2, 1.0, 0.5, 0.0];
        let v = [1.0, 0.4, 0.9, 0.3, 0.6];
        let f = MeasuredFunction::from_fn(g, |p| 0.8 * u[p[0]] * v[p[1]]).unwrap();
        let (_, rep) = fit_weighted_cylinders(&f, 1, 3, 200, 1, None).unwrap();
        assert!(rep.error < 1e-6, "{rep:?}");
    }

    fn parity_decomposition(t: &crate::gen::ParityTriple) -> CylinderDecomposition {
        let g = t.e.grid().clone();
        let layer = |r: &crate::space::Relation, pos: Vec<usize>, on: bool| Factor {
            values: if on { r.function().clone() } else { r.complement().into_function() },
            positions: pos,
        };
        let terms = [(true, false, false), (false, true, false), (false, false, true), (true, true, true)]
            .iter()
            .map(|&(a, b, c)| CylinderTerm {
                gamma: 1.0,
                factors: vec![layer(&t.f, vec![0, 1], a), layer(&t.g, vec![0, 2], b), layer(&t.h, vec![1, 2], c)],
            })
            .collect();
        CylinderDecomposition::new(g, 2, terms).unwrap()
    }

    #[test]
    fn oracle_initialization_is_a_fixed_point() {
        let t = parity_triple(4, 5).unwrap();
        let d = parity_decomposition(&t);
        assert_eq!(d.values(), t.e.function().values());
        let (out, rep) = fit_weighted_cylinders(t.e.function(), 2, 4, 30, 0, Some(&d)).unwrap();
        assert!(rep.error <= 1e-9);
        assert_eq!(out.len(), 4);

        // random representable target, started from its own factors
        let g = grid(&[3, 3, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let terms: Vec<CylinderTerm> = (0..3)
            .map(|_| CylinderTerm {
                gamma: rng.gen_range(0.0..0.33),
                factors: [vec![0], vec![1], vec![2]]
                    .into_iter()
                    .map(|pos| Factor {
                        values: MeasuredFunction::new(g.sub_grid(&pos).unwrap(), (0..3).map(|_| rng.gen()).collect())
                            .unwrap(),
                        positions: pos,
                    })
                    .collect(),
            })
            .collect();
        let d = CylinderDecomposition::new(g, 1, terms).unwrap();
        let f = d.to_function().unwrap();
        let (_, rep) = fit_weighted_cylinders(&f, 1, 3, 50, 9, Some(&d)).unwrap();
        assert!(rep.error <= 1e-9);
    }

    #[test]
    fn error_never_exceeds_baseline_and_shrinks_with_budget() {
        let g = grid(&[5, 5, 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = MeasuredFunction::from_fn(g, |_| rng.gen()).unwrap();
        let mut last = f64::INFINITY;
        for n in [1, 2, 4, 8] {
            let (_, rep) = fit_weighted_cylinders(&f, 2, n, 30, 3, None).unwrap();
            assert!(rep.error <= rep.baseline + 1e-12);
            assert!(rep.error <= last + 1e-12);
            last = rep.error;
        }
    }

    #[test]
    fn parity_is_determined_by_binary_layers() {
        // measured: errors below 1e-3 by N = 8 across seeds 0..6
        for seed in [0, 3] {
            let t = parity_triple(5, seed).unwrap();
            let (d, rep) = fit_weighted_cylinders(t.e.function(), 2, 16, 100, seed, None).unwrap();
            assert!(rep.error < 0.05, "seed {seed}: {rep:?}");
            assert!(d.len() <= 16);
        }
    }

    #[test]
    fn rejects_bad_arity() {
        let g = grid(&[3, 3]);
        let f = MeasuredFunction::constant(g, 0.5).unwrap();
        assert!(fit_weighted_cylinders(&f, 2, 3, 5, 0, None).is_err());
        assert!(fit_weighted_cylinders(&f, 1, 0, 5, 0, None).is_err());
    }
}

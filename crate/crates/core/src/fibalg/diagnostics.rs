use serde::{Deserialize, Serialize};

use super::{project_simple, AtomPartition};
use crate::error::{invalid, Error, Result};
use crate::numeric::{self, CompensatedSum};
use crate::space::{bounded_arith, ArithOp, MeasuredFunction, Relation};

/// Largest dyadic height tried by [`fuzziness`].
pub const DEFAULT_FUZZ_HEIGHT_CAP: u32 = 40;

/// Thresholds `r < s` and a level `δ > 0` such that the set of points whose
/// cell gives both `f < r` and `f >= s` conditional mass at least `δ` itself
/// has measure at least `δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyWitness {
    pub height: u32,
    pub r: f64,
    pub s: f64,
    pub delta: f64,
    /// Measure of the fuzzy set at level `delta`.
    pub measure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Fuzziness {
    Witness(FuzzyWitness),
    /// `f` is already within `ε` of its projection.
    NotApplicable { projection_error: f64 },
}

/// Conditional masses `E(χ_{f<r} | cell)` for each cell.
fn cond_below(f: &MeasuredFunction, part: &AtomPartition, masses: &[f64], below: impl Fn(f64) -> bool) -> Vec<f64> {
    let point = f.grid().point_masses();
    let mut acc = vec![CompensatedSum::new(); part.num_cells()];
    for (p, &c) in part.cell_of().iter().enumerate() {
        if below(f.values()[p]) {
            acc[c].add(point[p]);
        }
    }
    acc.iter()
        .zip(masses)
        .map(|(a, &m)| if m > 0.0 { a.value() / m } else { 0.0 })
        .collect()
}

/// Best `δ` for a pair of conditional-mass vectors: sort cells by
/// `min(lo, hi)` descending and take `max_j min(m_(j), mass of the top j)`.
fn best_delta(lo: &[f64], hi: &[f64], masses: &[f64]) -> f64 {
    let mut m: Vec<(f64, f64)> = lo
        .iter()
        .zip(hi)
        .zip(masses)
        .filter(|(_, &w)| w > 0.0)
        .map(|((&a, &b), &w)| (a.min(b), w))
        .collect();
    m.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut cum = 0.0;
    let mut best = 0.0f64;
    for (v, w) in m {
        cum += w;
        best = best.max(v.min(cum));
    }
    best
}

fn fuzzy_measure(lo: &[f64], hi: &[f64], masses: &[f64], delta: f64) -> f64 {
    numeric::csum(
        lo.iter()
            .zip(hi)
            .zip(masses)
            .filter(|((&a, &b), _)| a >= delta && b >= delta)
            .map(|(_, &w)| w),
    )
}

/// Searches dyadic heights `t = 1, 2, ...` for thresholds witnessing that
/// `f` is not measurable with respect to `partition`.
pub fn fuzziness(
    f: &MeasuredFunction,
    partition: &AtomPartition,
    eps: f64,
    height_cap: u32,
) -> Result<Fuzziness> {
    if !(eps > 0.0) {
        return Err(invalid!("ε must be positive"));
    }
    let projection_error = project_simple(f, partition, None)?.error;
    if projection_error < eps {
        return Ok(Fuzziness::NotApplicable { projection_error });
    }
    let masses = partition.cell_masses();
    let mut attained: Vec<f64> = f.values().to_vec();
    attained.sort_by(f64::total_cmp);
    attained.dedup();
    let mut trace = Vec::new();
    for t in 1..=height_cap.min(52) {
        let q = numeric::dyadic_grid(t);
        // thresholds with the same sets {f < q}: keep the smallest r and the
        // largest s of each class, which favours wide gaps on ties
        let class = |x: f64| attained.partition_point(|&v| v < x);
        let mut rs: Vec<f64> = Vec::new();
        let mut ss: Vec<f64> = Vec::new();
        for (i, &x) in q.iter().enumerate() {
            if i == 0 || class(x) != class(q[i - 1]) {
                rs.push(x);
            }
            if i + 1 == q.len() || class(x) != class(q[i + 1]) {
                ss.push(x);
            }
        }
        let los: Vec<Vec<f64>> = rs.iter().map(|&r| cond_below(f, partition, &masses, |v| v < r)).collect();
        let his: Vec<Vec<f64>> = ss
            .iter()
            .map(|&s| cond_below(f, partition, &masses, |v| v >= s))
            .collect();
        let mut best: Option<(f64, f64, f64)> = None;
        for (ri, &r) in rs.iter().enumerate() {
            for (si, &s) in ss.iter().enumerate() {
                if s <= r {
                    continue;
                }
                let d = best_delta(&los[ri], &his[si], &masses);
                let better = match best {
                    None => d > 0.0,
                    Some((bd, br, bs)) => d > bd || (d == bd && s - r > bs - br),
                };
                if better {
                    best = Some((d, r, s));
                }
            }
        }
        trace.push(format!(
            "t={t}: {} r-classes, {} s-classes, best δ={}",
            rs.len(),
            ss.len(),
            best.map_or(0.0, |b| b.0)
        ));
        if let Some((delta, r, s)) = best {
            let ri = rs.iter().position(|&x| x == r).unwrap_or(0);
            let si = ss.iter().position(|&x| x == s).unwrap_or(0);
            // recompute from scratch before returning
            let lo = cond_below(f, partition, &masses, |v| v < r);
            let hi = cond_below(f, partition, &masses, |v| v >= s);
            debug_assert_eq!(lo, los[ri]);
            debug_assert_eq!(hi, his[si]);
            let measure = fuzzy_measure(&lo, &hi, &masses, delta);
            if !(r < s && delta > 0.0 && measure >= delta) {
                trace.push(format!("verification failed at r={r}, s={s}, δ={delta}, μ={measure}"));
                return Err(Error::DiagnosticFailure {
                    message: "fuzziness witness failed verification".into(),
                    trace,
                });
            }
            return Ok(Fuzziness::Witness(FuzzyWitness {
                height: t,
                r,
                s,
                delta,
                measure,
            }));
        }
    }
    Err(Error::DiagnosticFailure {
        message: format!("no fuzziness witness up to height {height_cap}"),
        trace,
    })
}

/// Thresholds `r < s` with `μ(f0 < r) > μ(f1 < s)`, found among the gaps
/// between attained values. `None` unless `∫ f1 > ∫ f0`.
pub fn threshold_witness(f0: &MeasuredFunction, f1: &MeasuredFunction) -> Result<Option<(f64, f64)>> {
    f0.ensure_same_grid(f1)?;
    if f1.integral() <= f0.integral() {
        return Ok(None);
    }
    let mass = f0.grid().point_masses();
    let at_most = |f: &MeasuredFunction, u: f64| {
        numeric::csum(
            f.values()
                .iter()
                .zip(&mass)
                .filter(|(&v, _)| v <= u)
                .map(|(_, &w)| w),
        )
    };
    let below = |f: &MeasuredFunction, x: f64| {
        numeric::csum(
            f.values()
                .iter()
                .zip(&mass)
                .filter(|(&v, _)| v < x)
                .map(|(_, &w)| w),
        )
    };
    let mut u: Vec<f64> = f0.values().iter().chain(f1.values()).copied().collect();
    u.extend([0.0, 1.0]);
    u.sort_by(f64::total_cmp);
    u.dedup();
    for w in u.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if at_most(f0, lo) > at_most(f1, lo) {
            let gap = hi - lo;
            let (r, s) = (lo + gap / 3.0, lo + 2.0 * gap / 3.0);
            if r < s && below(f0, r) > below(f1, s) {
                return Ok(Some((r, s)));
            }
        }
    }
    Ok(None)
}

/// Smoothed indicator of `[f < g]`.
#[derive(Clone, Debug)]
pub struct SmoothIndicator {
    /// `p ×̇ (g ∸ f)`
    pub approximant: MeasuredFunction,
    pub p: u64,
    /// `‖χ_{[f<g]} - approximant‖_{L²}`, recomputed directly.
    pub error: f64,
}

/// Picks the repetition count `p` so that `p ×̇ (g ∸ f)` is within `ε` of
/// `χ_{[f<g]}`. The gap `γ` is the largest attained value of `g - f` such
/// that `μ(0 < g - f < γ) < ε²`, and `p = ⌈1/γ⌉`.
pub fn smooth_indicator(f: &MeasuredFunction, g: &MeasuredFunction, eps: f64) -> Result<SmoothIndicator> {
    f.ensure_same_grid(g)?;
    if !(eps > 0.0) {
        return Err(invalid!("ε must be positive"));
    }
    let mass = f.grid().point_masses();
    let gaps: Vec<(f64, f64)> = f
        .values()
        .iter()
        .zip(g.values())
        .zip(&mass)
        .filter(|((a, b), _)| a < b)
        .map(|((a, b), &w)| (b - a, w))
        .collect();
    let target: Vec<f64> = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| if a < b { 1.0 } else { 0.0 })
        .collect();
    let diff = bounded_arith(g, Some(f), ArithOp::Monus)?;
    let build = |p: u64| -> Result<(MeasuredFunction, f64)> {
        let h = bounded_arith(&diff, None, ArithOp::Repeat(p))?;
        let err = crate::space::l2_distance_raw(f.grid(), &target, h.values());
        Ok((h, err))
    };
    let mut p = if gaps.is_empty() {
        1
    } else {
        let mut sorted = gaps.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut gamma = sorted[0].0;
        let mut below = CompensatedSum::new();
        let mut i = 0;
        while i < sorted.len() {
            let v = sorted[i].0;
            // μ(0 < g - f < v) is the mass accumulated before v
            if below.value() < eps * eps {
                gamma = v;
            } else {
                break;
            }
            while i < sorted.len() && sorted[i].0 == v {
                below.add(sorted[i].1);
                i += 1;
            }
        }
        (1.0 / gamma).ceil().max(1.0) as u64
    };
    let (mut h, mut error) = build(p)?;
    // guards against 1/γ rounding down by an ulp
    while error >= eps && p < u64::MAX / 2 {
        p += 1;
        (h, error) = build(p)?;
    }
    Ok(SmoothIndicator {
        approximant: h,
        p,
        error,
    })
}

/// Union of the cells on which `x` has conditional mass above `eps`.
pub fn round_to_union(x: &Relation, partition: &AtomPartition, eps: f64) -> Result<Relation> {
    if !x.grid().same_as(partition.grid()) {
        return Err(invalid!("relation and partition live on different grids"));
    }
    let means = partition.cell_means(x.function().values());
    let mask: Vec<bool> = partition.cell_of().iter().map(|&c| means[c] > eps).collect();
    Relation::from_mask(x.grid().clone(), &mask)
}

//! Adversarial measures built from shattered boxes, and how well low-arity
//! decompositions cope with them.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::fit_weighted_cylinders;
use crate::error::{invalid, Result};
use crate::gen::bernoulli;
use crate::gowers::{box_norm, DEFAULT_DEGREE_CAP};
use crate::rng::{self, STREAM_BERNOULLI, STREAM_SWEEP, STREAM_WEIGHTED_FIT};
use crate::space::{fiber, level_set, Grid, LevelMode, MeasuredFunction, PartiteSpace, Relation, Signature};
use crate::vck::{ShatterMode, ShatteringCertificate};

pub const DEFAULT_RESTARTS: usize = 5;
pub const DEFAULT_ALS_ITERS: usize = 100;

/// i.i.d. Bernoulli(`p`) pattern on `[d]^(k+1)`.
pub fn random_pattern(d: usize, k: usize, p: f64, seed: u64) -> Result<Relation> {
    if d == 0 {
        return Err(invalid!("pattern side must be at least 1"));
    }
    let grid = Grid::new(PartiteSpace::uniform(&vec![d; k + 1])?, Signature::new((0..=k).collect()))?;
    bernoulli(&grid, p, &mut rng::stream(seed, STREAM_BERNOULLI))
}

/// A base function re-measured so that only a copy of a pattern is visible.
#[derive(Clone, Debug)]
pub struct AdversarialInstance {
    /// The base function over the replacement space.
    pub function: MeasuredFunction,
    pub certificate: ShatteringCertificate,
    pub pattern: Relation,
    /// `(position, vertex)` point masses for coordinates outside the box.
    pub anchors: Vec<(usize, usize)>,
    /// Witness vertex standing in for each pattern column.
    pub columns: Vec<usize>,
}

impl AdversarialInstance {
    pub fn space(&self) -> &Arc<PartiteSpace> {
        self.function.space()
    }

    /// The set the certificate's subsets select: `E` in relation mode,
    /// `f <= r` in threshold mode.
    pub fn level_indicator(&self) -> Result<Relation> {
        match self.certificate.mode {
            ShatterMode::Relation => level_set(&self.function, LevelMode::AtLeast(0.5)),
            ShatterMode::Threshold { r, .. } => level_set(&self.function, LevelMode::AtMost(r)),
        }
    }
}

/// Replaces the measures of `f`'s parts: uniform on each box side, the
/// pushforward of the uniform measure on pattern columns through their
/// witnesses on the distinguished part, and a unit mass on every anchor.
///
/// The certificate refers to the fiber of `f` at `anchors`, whose coordinates
/// are the remaining ones in increasing order. Columns of the pattern with
/// equal traces share a witness, which then carries their combined weight.
pub fn build_instance(
    f: &MeasuredFunction,
    cert: &ShatteringCertificate,
    pattern: &Relation,
    anchors: &[(usize, usize)],
) -> Result<AdversarialInstance> {
    let sides = cert.vc_box.sides();
    let k = sides.len();
    let d = sides.first().map_or(0, Vec::len);
    if d == 0 || sides.iter().any(|s| s.len() != d) {
        return Err(invalid!("embedding needs a non-empty square box"));
    }
    if pattern.arity() != k + 1 || pattern.grid().shape().iter().any(|&s| s != d) {
        return Err(invalid!("pattern must live on [{d}]^{}", k + 1));
    }
    let grid = f.grid();
    let arity = grid.arity();
    if arity != k + 1 + anchors.len() {
        return Err(invalid!(
            "arity {arity} does not match a {k}-dimensional box plus {} anchors",
            anchors.len()
        ));
    }
    let restricted = fiber(f, anchors)?;
    cert.verify(&restricted)?;
    let rest: Vec<usize> = (0..arity).filter(|p| !anchors.iter().any(|a| a.0 == *p)).collect();
    let witness_pos = rest[cert.distinguished];
    let box_pos: Vec<usize> = rest.iter().copied().filter(|&p| p != witness_pos).collect();

    let mut parts_seen = Vec::new();
    for p in box_pos.iter().chain([&witness_pos]).chain(anchors.iter().map(|a| &a.0)) {
        let part = grid.part_of(*p);
        if parts_seen.contains(&part) {
            return Err(invalid!("coordinates sharing part {part} cannot carry different measures"));
        }
        parts_seen.push(part);
    }

    // witness of every column's trace
    let by_subset: HashMap<&[usize], usize> =
        cert.witnesses.iter().map(|w| (w.subset.as_slice(), w.witness)).collect();
    let box_len = d.pow(k as u32);
    let columns: Vec<usize> = (0..d)
        .map(|j| {
            let subset: Vec<usize> = (0..box_len).filter(|&x| pattern.contains_flat(x * d + j)).collect();
            by_subset
                .get(subset.as_slice())
                .copied()
                .ok_or_else(|| invalid!("certificate has no witness for column {j}"))
        })
        .collect::<Result<_>>()?;

    let space = grid.space();
    let mut new_space = space.clone();
    for (&p, side) in box_pos.iter().zip(sides) {
        let mut w = vec![0.0; space.part_size(grid.part_of(p))];
        for &v in side {
            if w[v] != 0.0 {
                return Err(invalid!("box side repeats vertex {v}"));
            }
            w[v] = 1.0 / d as f64;
        }
        new_space = new_space.with_weights(grid.part_of(p), w)?;
    }
    let mut counts = vec![0usize; space.part_size(grid.part_of(witness_pos))];
    for &c in &columns {
        counts[c] += 1;
    }
    let w = counts.iter().map(|&c| c as f64 / d as f64).collect();
    new_space = new_space.with_weights(grid.part_of(witness_pos), w)?;
    for &(p, v) in anchors {
        let mut w = vec![0.0; space.part_size(grid.part_of(p))];
        w[v] = 1.0;
        new_space = new_space.with_weights(grid.part_of(p), w)?;
    }
    Ok(AdversarialInstance {
        function: f.with_space(new_space)?,
        certificate: cert.clone(),
        pattern: pattern.clone(),
        anchors: anchors.to_vec(),
        columns,
    })
}

/// Smallest weighted-fit error over `restarts` seeds.
pub fn fit_score(f: &MeasuredFunction, k: usize, n_terms: usize, restarts: usize, als_iters: usize, seed: u64) -> Result<f64> {
    if restarts == 0 {
        return Err(invalid!("need at least one restart"));
    }
    let errors: Vec<f64> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let s = rng::trial_seed(seed, STREAM_WEIGHTED_FIT, r as u32);
            fit_weighted_cylinders(f, k, n_terms, als_iters, s, None).map(|(_, rep)| rep.error)
        })
        .collect::<Result<_>>()?;
    Ok(errors.into_iter().fold(f64::INFINITY, f64::min))
}

/// Best L² error of a `k`-ary cylinder fit with `n_terms` terms under the
/// instance measure, over [`DEFAULT_RESTARTS`] restarts.
pub fn inapproximability_score(inst: &AdversarialInstance, k: usize, n_terms: usize, seed: u64) -> Result<f64> {
    fit_score(&inst.function, k, n_terms, DEFAULT_RESTARTS, DEFAULT_ALS_ITERS, seed)
}

/// Parameters of a quasirandomness sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub k: usize,
    pub d_values: Vec<usize>,
    pub trials: usize,
    #[serde(default = "half")]
    pub p: f64,
    /// Terms allowed when scoring each pattern.
    #[serde(default = "four")]
    pub score_terms: usize,
    #[serde(default = "restarts")]
    pub restarts: usize,
    #[serde(default = "als_iters")]
    pub als_iters: usize,
    pub seed: u64,
}

fn half() -> f64 {
    0.5
}
fn four() -> usize {
    4
}
fn restarts() -> usize {
    DEFAULT_RESTARTS
}
fn als_iters() -> usize {
    DEFAULT_ALS_ITERS
}

impl SweepConfig {
    pub fn new(k: usize, d_values: Vec<usize>, trials: usize, seed: u64) -> Self {
        SweepConfig {
            k,
            d_values,
            trials,
            p: half(),
            score_terms: four(),
            restarts: restarts(),
            als_iters: als_iters(),
            seed,
        }
    }
}

/// Seed of trial `t` at side `d`; independent of the other sides swept.
pub fn pattern_seed(seed: u64, d: usize, t: usize) -> u64 {
    rng::trial_seed(seed, STREAM_SWEEP, ((d as u32) << 16) | t as u32)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub d: usize,
    pub mean_norm: f64,
    pub std: f64,
    /// Mean best fit error of the patterns themselves under the uniform
    /// measure, which is what an instance measure sees when all columns
    /// have distinct witnesses.
    pub mean_score: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = crate::numeric::csum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = crate::numeric::csum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
    (mean, var.sqrt())
}

/// Statistics of `‖χ_H - 1/2‖` in the `(k+1)`-fold box norm for random
/// patterns `H` on `[d]^(k+1)`, per side `d`.
pub fn quasirandomness_curve(cfg: &SweepConfig) -> Result<Vec<CurveRow>> {
    if cfg.k + 1 > DEFAULT_DEGREE_CAP {
        return Err(invalid!("k + 1 = {} exceeds the box norm degree cap", cfg.k + 1));
    }
    if cfg.trials == 0 || cfg.trials >= 1 << 16 {
        return Err(invalid!("trials must be in 1..65536"));
    }
    let mut rows = Vec::with_capacity(cfg.d_values.len());
    for &d in &cfg.d_values {
        if d == 0 || d >= 1 << 16 {
            return Err(invalid!("side {d} out of range"));
        }
        let stats: Vec<(f64, f64)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let h = random_pattern(d, cfg.k, cfg.p, pattern_seed(cfg.seed, d, t))?;
                let centered = h.function().centered(0.5)?;
                let norm = box_norm(&centered, DEFAULT_DEGREE_CAP)?.norm;
                let score = fit_score(h.function(), cfg.k, cfg.score_terms, cfg.restarts, cfg.als_iters, cfg.seed)?;
                Ok((norm, score))
            })
            .collect::<Result<_>>()?;
        let norms: Vec<f64> = stats.iter().map(|s| s.0).collect();
        let (mean_norm, std) = mean_std(&norms);
        let mean_score = mean_std(&stats.iter().map(|s| s.1).collect::<Vec<_>>()).0;
        rows.push(CurveRow { d, mean_norm, std, mean_score });
    }
    for w in rows.windows(2) {
        if w[1].d > w[0].d && w[1].mean_norm >= w[0].mean_norm {
            if w[1].mean_norm - w[0].mean_norm <= w[0].std.max(w[1].std) {
                log::warn!("mean norm rises from d={} to d={} within one std", w[0].d, w[1].d);
            } else {
                log::warn!("mean norm rises from d={} to d={} by more than one std", w[0].d, w[1].d);
            }
        }
    }
    Ok(rows)
}

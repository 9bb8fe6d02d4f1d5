//! Shattering search and VC_k dimension of relations and `[0,1]`-valued
//! functions, plus the trace-counting bounds.
//!
//! A function of arity `k+1` is viewed as a family of `k`-ary patterns
//! indexed by one *distinguished* coordinate. The other `k` coordinates span
//! the box `A_1 x ... x A_k`; the box grid is enumerated row-major in the
//! order the vertices are listed, and subsets of it are bitmasks over that
//! enumeration.

mod bounds;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric;
use crate::space::{fiber, MeasuredFunction, Relation};

pub use bounds::{sauer_shelah_bound, zarankiewicz};

/// Default cap on the number of box grid points (so `2^16` subsets).
pub const DEFAULT_GRID_CAP: usize = 16;
/// Hard ceiling on the grid cap; masks are stored in `u32`.
pub const MAX_GRID_CAP: usize = 24;

/// How a witness realizes a subset of the box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ShatterMode {
    /// Boolean relations: `S = A ∩ E_b`, so `S` is where the relation holds.
    Relation,
    /// `f <= r` on `S` and `f >= s` on the rest of the box.
    Threshold { r: f64, s: f64 },
}

impl ShatterMode {
    pub fn threshold(r: f64, s: f64) -> Result<Self> {
        if !(r.is_finite() && s.is_finite()) || r > s {
            return Err(invalid!("thresholds need r <= s, got r={r}, s={s}"));
        }
        Ok(ShatterMode::Threshold { r, s })
    }

    fn check_against(&self, f: &MeasuredFunction) -> Result<()> {
        if matches!(self, ShatterMode::Relation) && !f.is_boolean() {
            return Err(invalid!("relation mode needs a {{0,1}}-valued function"));
        }
        Ok(())
    }

    /// Returns `(must, may)`: the point must be in `S`, the point may be in `S`.
    #[inline]
    fn classify(&self, v: f64) -> (bool, bool) {
        match *self {
            ShatterMode::Relation => {
                let inside = v >= 0.5;
                (inside, inside)
            }
            ShatterMode::Threshold { r, s } => (v < s, v <= r),
        }
    }

    /// Whether every witness realizes at most one subset.
    fn is_rigid(&self) -> bool {
        match *self {
            ShatterMode::Relation => true,
            ShatterMode::Threshold { r, s } => r < s,
        }
    }
}

/// A box `A_1 x ... x A_k`: one vertex list per non-distinguished coordinate,
/// in increasing position order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VcBox(pub Vec<Vec<usize>>);

impl VcBox {
    pub fn sides(&self) -> &[Vec<usize>] {
        &self.0
    }

    pub fn grid_len(&self) -> usize {
        self.0.iter().map(Vec::len).product()
    }

    /// Box grid points in row-major order.
    pub fn points(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.grid_len());
        let mut idx = vec![0usize; self.0.len()];
        if self.0.iter().any(Vec::is_empty) {
            return out;
        }
        loop {
            out.push(idx.iter().zip(&self.0).map(|(&i, s)| s[i]).collect());
            let mut j = self.0.len();
            loop {
                if j == 0 {
                    return out;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < self.0[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

/// One subset of the box grid and the vertex that realizes it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessEntry {
    /// Indices into the row-major box grid.
    pub subset: Vec<usize>,
    pub witness: usize,
}

/// Proof that a box is shattered: a witness for every subset of its grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShatteringCertificate {
    #[serde(rename = "box")]
    pub vc_box: VcBox,
    pub distinguished: usize,
    #[serde(flatten)]
    pub mode: ShatterMode,
    /// Box grid points, listed for readability.
    pub points: Vec<Vec<usize>>,
    pub witnesses: Vec<WitnessEntry>,
}

fn mask_to_subset(mask: u32, g: usize) -> Vec<usize> {
    (0..g).filter(|i| mask >> i & 1 == 1).collect()
}

fn subset_to_mask(subset: &[usize], g: usize) -> Result<u32> {
    let mut m = 0u32;
    for &i in subset {
        if i >= g {
            return Err(invalid!("subset index {i} outside a grid of {g} points"));
        }
        m |= 1 << i;
    }
    Ok(m)
}

impl ShatteringCertificate {
    /// Recomputes every witness condition against `f`.
    pub fn verify(&self, f: &MeasuredFunction) -> Result<()> {
        let probe = Probe::new(f, &self.vc_box, self.distinguished, MAX_GRID_CAP)?;
        let g = probe.grid_len;
        if self.witnesses.len() != 1usize << g {
            return Err(invalid!(
                "certificate lists {} witnesses, a {g}-point grid needs {}",
                self.witnesses.len(),
                1usize << g
            ));
        }
        let mut seen = vec![false; 1 << g];
        for w in &self.witnesses {
            let mask = subset_to_mask(&w.subset, g)?;
            if std::mem::replace(&mut seen[mask as usize], true) {
                return Err(invalid!("subset {:?} listed twice", w.subset));
            }
            if w.witness >= probe.witness_count {
                return Err(invalid!("witness vertex {} out of range", w.witness));
            }
            for (i, &off) in probe.offsets.iter().enumerate() {
                let v = f.values()[off + w.witness * probe.witness_stride];
                let (must, may) = self.mode.classify(v);
                let inside = mask >> i & 1 == 1;
                if (inside && !may) || (!inside && must) {
                    return Err(invalid!(
                        "witness {} fails at grid point {i} (value {v}) for subset {:?}",
                        w.witness,
                        w.subset
                    ));
                }
            }
        }
        Ok(())
    }

    /// The same shattering seen through threshold semantics: a relation
    /// certificate for `E` is an `(r, s)` certificate for `χ_E` after
    /// complementing every subset, for any `0 <= r < s <= 1`.
    pub fn to_threshold(&self, r: f64, s: f64) -> Result<Self> {
        if !matches!(self.mode, ShatterMode::Relation) {
            return Err(invalid!("certificate is already in threshold mode"));
        }
        if !(0.0 <= r && r < s && s <= 1.0) {
            return Err(invalid!("need 0 <= r < s <= 1"));
        }
        let g = self.points.len();
        let full = if g == 32 { u32::MAX } else { (1u32 << g) - 1 };
        let mut witnesses = self
            .witnesses
            .iter()
            .map(|w| {
                let m = full & !subset_to_mask(&w.subset, g)?;
                Ok((m, w.witness))
            })
            .collect::<Result<Vec<_>>>()?;
        witnesses.sort_unstable();
        Ok(ShatteringCertificate {
            mode: ShatterMode::Threshold { r, s },
            witnesses: witnesses
                .into_iter()
                .map(|(m, b)| WitnessEntry {
                    subset: mask_to_subset(m, g),
                    witness: b,
                })
                .collect(),
            ..self.clone()
        })
    }
}

/// Flat offsets of the box grid inside `f` (distinguished coordinate at 0).
struct Probe {
    offsets: Vec<usize>,
    witness_stride: usize,
    witness_count: usize,
    grid_len: usize,
}

impl Probe {
    fn new(f: &MeasuredFunction, vc_box: &VcBox, distinguished: usize, cap: usize) -> Result<Self> {
        let grid = f.grid();
        let arity = grid.arity();
        if distinguished >= arity {
            return Err(invalid!(
                "distinguished coordinate {distinguished} out of range for arity {arity}"
            ));
        }
        if vc_box.0.len() + 1 != arity {
            return Err(invalid!(
                "box has {} sides, a function of arity {arity} needs {}",
                vc_box.0.len(),
                arity - 1
            ));
        }
        let positions: Vec<usize> = (0..arity).filter(|&p| p != distinguished).collect();
        for (side, &pos) in vc_box.0.iter().zip(&positions) {
            if side.is_empty() {
                return Err(invalid!("box side for position {pos} is empty"));
            }
            let mut seen = vec![false; grid.shape()[pos]];
            for &v in side {
                if v >= seen.len() {
                    return Err(invalid!("vertex {v} out of range at position {pos}"));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(invalid!("vertex {v} repeated in box side {pos}"));
                }
            }
        }
        let g = vc_box.grid_len();
        if g > cap.min(MAX_GRID_CAP) {
            return Err(Error::ResourceLimit(format!(
                "box grid has {g} points, cap is {}",
                cap.min(MAX_GRID_CAP)
            )));
        }
        let offsets = vc_box
            .points()
            .iter()
            .map(|p| p.iter().zip(&positions).map(|(&v, &pos)| v * grid.strides()[pos]).sum())
            .collect();
        Ok(Probe {
            offsets,
            witness_stride: grid.strides()[distinguished],
            witness_count: grid.shape()[distinguished],
            grid_len: g,
        })
    }

    /// Calls `emit(mask, b)` for every subset witness `b` realizes.
    fn scan(&self, f: &MeasuredFunction, mode: ShatterMode, mut emit: impl FnMut(u32, usize)) {
        let vals = f.values();
        for b in 0..self.witness_count {
            let base = b * self.witness_stride;
            let (mut must, mut may) = (0u32, 0u32);
            for (i, &off) in self.offsets.iter().enumerate() {
                let (m, y) = mode.classify(vals[base + off]);
                must |= (m as u32) << i;
                may |= (y as u32) << i;
            }
            if must & !may != 0 {
                continue;
            }
            let free = may & !must;
            // all S with must ⊆ S ⊆ may
            let mut sub = free;
            loop {
                emit(must | sub, b);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & free;
            }
        }
    }
}

/// Which box-grid subsets `f` realizes as witnesses, as a bitset over masks.
fn realized(f: &MeasuredFunction, probe: &Probe, mode: ShatterMode) -> (Vec<u64>, usize) {
    let total = 1usize << probe.grid_len;
    let mut bits = vec![0u64; total.div_ceil(64)];
    let mut count = 0;
    probe.scan(f, mode, |m, _| {
        let (w, b) = (m as usize / 64, m as usize % 64);
        if bits[w] >> b & 1 == 0 {
            bits[w] |= 1 << b;
            count += 1;
        }
    });
    (bits, count)
}

fn certificate(
    f: &MeasuredFunction,
    probe: &Probe,
    vc_box: &VcBox,
    distinguished: usize,
    mode: ShatterMode,
) -> Option<ShatteringCertificate> {
    let g = probe.grid_len;
    let total = 1usize << g;
    if mode.is_rigid() && probe.witness_count < total {
        return None;
    }
    let (_, count) = realized(f, probe, mode);
    if count < total {
        return None;
    }
    let mut first = vec![usize::MAX; total];
    probe.scan(f, mode, |m, b| {
        if first[m as usize] == usize::MAX {
            first[m as usize] = b;
        }
    });
    Some(ShatteringCertificate {
        vc_box: vc_box.clone(),
        distinguished,
        mode,
        points: vc_box.points(),
        witnesses: first
            .into_iter()
            .enumerate()
            .map(|(m, b)| WitnessEntry {
                subset: mask_to_subset(m as u32, g),
                witness: b,
            })
            .collect(),
    })
}

/// Tests whether `vc_box` is shattered, returning a certificate if so.
pub fn check_shattered(
    f: &MeasuredFunction,
    vc_box: &VcBox,
    distinguished: usize,
    mode: ShatterMode,
    cap: usize,
) -> Result<Option<ShatteringCertificate>> {
    mode.check_against(f)?;
    let probe = Probe::new(f, vc_box, distinguished, cap)?;
    Ok(certificate(f, &probe, vc_box, distinguished, mode))
}

/// Number of distinct traces `A ∩ E_b` over all `b`.
pub fn trace_count(e: &Relation, vc_box: &VcBox, distinguished: usize) -> Result<usize> {
    let probe = Probe::new(e.function(), vc_box, distinguished, MAX_GRID_CAP)?;
    Ok(realized(e.function(), &probe, ShatterMode::Relation).1)
}

/// Outcome of a dimension search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VcResult {
    /// Largest `d` with a shattered `d`-box (0 if none).
    pub dimension: usize,
    /// A certificate for the lexicographically least shattered box of that size.
    pub certificate: Option<ShatteringCertificate>,
    /// False when the grid cap stopped the search before it was exhausted;
    /// `dimension` is then only a certified lower bound.
    pub complete: bool,
}

/// Advances a sorted `d`-combination of `0..n`; false when exhausted.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let d = c.len();
    for i in (0..d).rev() {
        if c[i] < n - d + i {
            c[i] += 1;
            for j in i + 1..d {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// First shattered square `d`-box in lexicographic order.
fn find_square_box(
    f: &MeasuredFunction,
    distinguished: usize,
    d: usize,
    mode: ShatterMode,
    cap: usize,
) -> Result<Option<ShatteringCertificate>> {
    let grid = f.grid();
    let sizes: Vec<usize> = (0..grid.arity())
        .filter(|&p| p != distinguished)
        .map(|p| grid.shape()[p])
        .collect();
    let mut sides: Vec<Vec<usize>> = sizes.iter().map(|_| (0..d).collect()).collect();
    loop {
        let vc_box = VcBox(sides.clone());
        let probe = Probe::new(f, &vc_box, distinguished, cap)?;
        if let Some(c) = certificate(f, &probe, &vc_box, distinguished, mode) {
            return Ok(Some(c));
        }
        let mut j = sides.len();
        loop {
            if j == 0 {
                return Ok(None);
            }
            j -= 1;
            if next_combination(&mut sides[j], sizes[j]) {
                break;
            }
            sides[j] = (0..d).collect();
        }
    }
}

/// Exact VC_k dimension at one threshold pair, with `k = arity - 1`.
pub fn vc_k(
    f: &MeasuredFunction,
    distinguished: usize,
    mode: ShatterMode,
    cap: usize,
) -> Result<VcResult> {
    mode.check_against(f)?;
    let grid = f.grid();
    let arity = grid.arity();
    if arity < 2 {
        return Err(invalid!("VC_k needs arity at least 2, got {arity}"));
    }
    if distinguished >= arity {
        return Err(invalid!("distinguished coordinate {distinguished} out of range"));
    }
    let k = (arity - 1) as u32;
    let max_side = (0..arity)
        .filter(|&p| p != distinguished)
        .map(|p| grid.shape()[p])
        .min()
        .unwrap_or(0);
    let witnesses = grid.shape()[distinguished];
    let cap = cap.min(MAX_GRID_CAP);
    let mut best = VcResult {
        dimension: 0,
        certificate: None,
        complete: true,
    };
    for d in 1..=max_side {
        let g = d.checked_pow(k).unwrap_or(usize::MAX);
        if mode.is_rigid() && (g >= usize::BITS as usize || witnesses < 1usize << g) {
            break;
        }
        if g > cap {
            best.complete = false;
            log::info!("VC_k search stopped at d={d}: {g} grid points exceed cap {cap}");
            break;
        }
        match find_square_box(f, distinguished, d, mode, cap)? {
            Some(c) => {
                best.dimension = d;
                best.certificate = Some(c);
            }
            // a shattered (d+1)-box contains a shattered d-box
            None => break,
        }
    }
    Ok(best)
}

/// Maximum of [`vc_k`] over all `(k+1)`-ary fibers of `f` and all choices of
/// the distinguished coordinate within each fiber.
pub fn vc_k_slicewise(
    f: &MeasuredFunction,
    k: usize,
    mode: ShatterMode,
    cap: usize,
) -> Result<VcResult> {
    let arity = f.arity();
    if k == 0 || arity < k + 1 {
        return Err(invalid!("slicewise VC_{k} needs arity >= {}, got {arity}", k + 1));
    }
    let mut best = VcResult {
        dimension: 0,
        certificate: None,
        complete: true,
    };
    let mut keep: Vec<usize> = (0..=k).collect();
    loop {
        let fixed_pos: Vec<usize> = (0..arity).filter(|p| !keep.contains(p)).collect();
        let fixed_shape: Vec<usize> = fixed_pos.iter().map(|&p| f.grid().shape()[p]).collect();
        let mut assign = vec![0usize; fixed_pos.len()];
        loop {
            let pins: Vec<(usize, usize)> =
                fixed_pos.iter().copied().zip(assign.iter().copied()).collect();
            let slice = fiber(f, &pins)?;
            for dist in 0..=k {
                let r = vc_k(&slice, dist, mode, cap)?;
                best.complete &= r.complete;
                if r.dimension > best.dimension {
                    best.dimension = r.dimension;
                    best.certificate = r.certificate;
                }
            }
            let mut j = assign.len();
            let mut done = true;
            while j > 0 {
                j -= 1;
                assign[j] += 1;
                if assign[j] < fixed_shape[j] {
                    done = false;
                    break;
                }
                assign[j] = 0;
            }
            if done {
                break;
            }
        }
        if !next_combination(&mut keep, arity) {
            break;
        }
    }
    Ok(best)
}

/// One entry of a threshold profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub r: f64,
    pub s: f64,
    pub dimension: usize,
    pub complete: bool,
}

/// `VC_k^{r,s}` for every dyadic pair `r < s` of height `t`.
pub fn vc_profile(
    f: &MeasuredFunction,
    distinguished: usize,
    t: u32,
    cap: usize,
) -> Result<Vec<ProfileEntry>> {
    let q = numeric::dyadic_grid(t);
    let mut out = Vec::new();
    for (i, &r) in q.iter().enumerate() {
        for &s in &q[i + 1..] {
            let res = vc_k(f, distinguished, ShatterMode::Threshold { r, s }, cap)?;
            out.push(ProfileEntry {
                r,
                s,
                dimension: res.dimension,
                complete: res.complete,
            });
        }
    }
    Ok(out)
}

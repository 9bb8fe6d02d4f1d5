use super::{Grid, MeasuredFunction, Relation, Signature};
use crate::error::{invalid, Result};
use crate::numeric::{self, CompensatedSum};

/// Threshold condition selecting a level set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LevelMode {
    /// `f < r`
    Below(f64),
    /// `f <= r`
    AtMost(f64),
    /// `f >= r`
    AtLeast(f64),
    /// `r <= f < q`
    Interval(f64, f64),
}

impl LevelMode {
    #[inline]
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            LevelMode::Below(r) => v < r,
            LevelMode::AtMost(r) => v <= r,
            LevelMode::AtLeast(r) => v >= r,
            LevelMode::Interval(r, q) => r <= v && v < q,
        }
    }
}

pub fn level_set(f: &MeasuredFunction, mode: LevelMode) -> Result<Relation> {
    if let LevelMode::Interval(r, q) = mode {
        if !(r < q) {
            return Err(invalid!("interval level set needs r < q, got [{r}, {q})"));
        }
    }
    let mask: Vec<bool> = f.values().iter().map(|&v| mode.holds(v)).collect();
    Relation::from_mask(f.grid().clone(), &mask)
}

/// Restriction of `f` with some coordinates fixed. `fixed` lists
/// `(position, vertex)` pairs; the residual coordinates keep their order.
pub fn fiber(f: &MeasuredFunction, fixed: &[(usize, usize)]) -> Result<MeasuredFunction> {
    let grid = f.grid();
    let arity = grid.arity();
    let mut pinned = vec![None; arity];
    for &(pos, v) in fixed {
        if pos >= arity {
            return Err(invalid!("fiber position {pos} out of range for arity {arity}"));
        }
        if pinned[pos].is_some() {
            return Err(invalid!("fiber position {pos} fixed twice"));
        }
        if v >= grid.shape()[pos] {
            return Err(invalid!(
                "vertex {v} out of range at position {pos} (size {})",
                grid.shape()[pos]
            ));
        }
        pinned[pos] = Some(v);
    }
    let free: Vec<usize> = (0..arity).filter(|&p| pinned[p].is_none()).collect();
    let sub = grid.sub_grid(&free)?;
    let base: usize = (0..arity)
        .filter_map(|p| pinned[p].map(|v| v * grid.strides()[p]))
        .sum();
    let mut values = vec![0.0; sub.len()];
    sub.for_each_point(|flat, p| {
        let idx = base
            + p.iter()
                .zip(&free)
                .map(|(&v, &pos)| v * grid.strides()[pos])
                .sum::<usize>();
        values[flat] = f.values()[idx];
    });
    Ok(MeasuredFunction::from_parts_unchecked(sub, values, f.is_signed()))
}

fn check_permutation(perm: &[usize], arity: usize) -> Result<()> {
    if perm.len() != arity {
        return Err(invalid!("permutation has length {}, arity is {arity}", perm.len()));
    }
    let mut seen = vec![false; arity];
    for &p in perm {
        if p >= arity || seen[p] {
            return Err(invalid!("{perm:?} is not a permutation of 0..{arity}"));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Reorders coordinates: axis `j` of the result is axis `perm[j]` of `f`,
/// i.e. `g(x_{σ(1)}, ..., x_{σ(n)}) = f(x_1, ..., x_n)`.
pub fn permute(f: &MeasuredFunction, perm: &[usize]) -> Result<MeasuredFunction> {
    let grid = f.grid();
    check_permutation(perm, grid.arity())?;
    let coords = perm.iter().map(|&p| grid.part_of(p)).collect();
    let out = Grid::new(grid.space().clone(), Signature(coords))?;
    let mut values = vec![0.0; out.len()];
    let src_strides: Vec<usize> = perm.iter().map(|&p| grid.strides()[p]).collect();
    out.for_each_point(|flat, y| {
        let idx: usize = y.iter().zip(&src_strides).map(|(v, s)| v * s).sum();
        values[flat] = f.values()[idx];
    });
    Ok(MeasuredFunction::from_parts_unchecked(out, values, f.is_signed()))
}

/// Operations that keep `[0,1]`-valued functions inside `[0,1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    /// `max(0, f - g)`
    Monus,
    /// `min(1, f + g)`
    TruncAdd,
    /// `f / 2`
    Half,
    /// `1 - f`
    Complement,
    /// `p` saturating additions of `f`
    Repeat(u64),
}

impl ArithOp {
    pub fn is_binary(&self) -> bool {
        matches!(self, ArithOp::Monus | ArithOp::TruncAdd)
    }
}

pub fn bounded_arith(
    f: &MeasuredFunction,
    g: Option<&MeasuredFunction>,
    op: ArithOp,
) -> Result<MeasuredFunction> {
    if f.is_signed() {
        return Err(invalid!("bounded arithmetic needs [0,1]-valued inputs"));
    }
    let values: Vec<f64> = if op.is_binary() {
        let g = g.ok_or_else(|| invalid!("{op:?} needs a second function"))?;
        f.ensure_same_grid(g)?;
        if g.is_signed() {
            return Err(invalid!("bounded arithmetic needs [0,1]-valued inputs"));
        }
        let h: fn(f64, f64) -> f64 = match op {
            ArithOp::Monus => numeric::monus,
            _ => numeric::trunc_add,
        };
        f.values()
            .iter()
            .zip(g.values())
            .map(|(&a, &b)| h(a, b))
            .collect()
    } else {
        f.values()
            .iter()
            .map(|&a| match op {
                ArithOp::Half => a / 2.0,
                ArithOp::Complement => 1.0 - a,
                ArithOp::Repeat(p) => numeric::repeat(p, a),
                _ => unreachable!(),
            })
            .collect()
    };
    debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
    Ok(MeasuredFunction::from_parts_unchecked(
        f.grid().clone(),
        values,
        false,
    ))
}

/// Pointwise `g(f_1(x), ..., f_n(x))`, clipped to `[0,1]`.
pub fn continuous_combine(
    fs: &[&MeasuredFunction],
    g: impl Fn(&[f64]) -> f64,
) -> Result<MeasuredFunction> {
    let first = fs.first().ok_or_else(|| invalid!("continuous_combine needs at least one function"))?;
    for f in &fs[1..] {
        first.ensure_same_grid(f)?;
    }
    let mut args = vec![0.0; fs.len()];
    let mut worst = 0.0f64;
    let values = (0..first.grid().len())
        .map(|i| {
            for (a, f) in args.iter_mut().zip(fs) {
                *a = f.values()[i];
            }
            let v = g(&args);
            worst = worst.max(-v).max(v - 1.0);
            v.clamp(0.0, 1.0)
        })
        .collect();
    if worst > 1e-9 {
        log::warn!("continuous_combine clipped an overshoot of {worst:e}");
    }
    Ok(MeasuredFunction::from_parts_unchecked(
        first.grid().clone(),
        values,
        false,
    ))
}

/// Integrates out one coordinate against its part's measure.
pub fn average_out(f: &MeasuredFunction, position: usize) -> Result<MeasuredFunction> {
    let grid = f.grid();
    if position >= grid.arity() {
        return Err(invalid!(
            "position {position} out of range for arity {}",
            grid.arity()
        ));
    }
    let keep: Vec<usize> = (0..grid.arity()).filter(|&p| p != position).collect();
    let out = grid.sub_grid(&keep)?;
    let w = grid.axis_weights(position);
    let stride = grid.strides()[position];
    let mut values = vec![0.0; out.len()];
    out.for_each_point(|flat, y| {
        let base: usize = y
            .iter()
            .zip(&keep)
            .map(|(&v, &p)| v * grid.strides()[p])
            .sum();
        let mut acc = CompensatedSum::new();
        for (v, &wv) in w.iter().enumerate() {
            acc.add(wv * f.values()[base + v * stride]);
        }
        values[flat] = acc.value();
    });
    // weighted averages stay inside [min f, max f] up to rounding
    let (lo, hi) = if f.is_signed() { (-1.0, 1.0) } else { (0.0, 1.0) };
    for v in &mut values {
        *v = v.clamp(lo, hi);
    }
    Ok(MeasuredFunction::from_parts_unchecked(out, values, f.is_signed()))
}

/// Pointwise product of functions on a common grid.
pub fn pointwise_product(fs: &[&MeasuredFunction]) -> Result<MeasuredFunction> {
    let first = fs.first().ok_or_else(|| invalid!("empty product"))?;
    let mut values = first.values().to_vec();
    let mut signed = first.is_signed();
    for f in &fs[1..] {
        first.ensure_same_grid(f)?;
        signed |= f.is_signed();
        for (v, w) in values.iter_mut().zip(f.values()) {
            *v *= w;
        }
    }
    Ok(MeasuredFunction::from_parts_unchecked(
        first.grid().clone(),
        values,
        signed,
    ))
}

/// Lifts a function on the coordinates `positions` of `target` to a
/// cylinder function on all of `target`.
pub fn cylinder_extend(
    sub: &MeasuredFunction,
    positions: &[usize],
    target: &Grid,
) -> Result<MeasuredFunction> {
    if positions.len() != sub.arity() {
        return Err(invalid!(
            "{} positions for a function of arity {}",
            positions.len(),
            sub.arity()
        ));
    }
    for (j, &p) in positions.iter().enumerate() {
        if p >= target.arity() {
            return Err(invalid!("position {p} out of range for arity {}", target.arity()));
        }
        if target.part_of(p) != sub.grid().part_of(j) {
            return Err(invalid!(
                "position {p} lives in part {} but the factor axis {j} is in part {}",
                target.part_of(p),
                sub.grid().part_of(j)
            ));
        }
    }
    let sub_strides = sub.grid().strides();
    let mut values = vec![0.0; target.len()];
    target.for_each_point(|flat, x| {
        let idx: usize = positions
            .iter()
            .zip(sub_strides)
            .map(|(&p, s)| x[p] * s)
            .sum();
        values[flat] = sub.values()[idx];
    });
    Ok(MeasuredFunction::from_parts_unchecked(
        target.clone(),
        values,
        sub.is_signed(),
    ))
}

/// The "all column traversals" relation: coordinate `j` of `r` is repeated
/// `counts[j]` times, and a point is included when every choice of one copy
/// per coordinate lands in `r`.
pub fn box_power(r: &Relation, counts: &[usize]) -> Result<Relation> {
    let grid = r.grid();
    if counts.len() != grid.arity() || counts.iter().any(|&d| d == 0) {
        return Err(invalid!("need one positive count per coordinate"));
    }
    let mut coords = Vec::new();
    let mut offsets = Vec::new();
    for (j, &d) in counts.iter().enumerate() {
        offsets.push(coords.len());
        coords.extend(std::iter::repeat(grid.part_of(j)).take(d));
    }
    let out = Grid::new(grid.space().clone(), Signature(coords))?;
    let combos: usize = counts.iter().product();
    let mut choice = vec![0usize; counts.len()];
    let mut base = vec![0usize; counts.len()];
    let mask: Vec<bool> = {
        let mut mask = vec![false; out.len()];
        out.for_each_point(|flat, x| {
            choice.iter_mut().for_each(|c| *c = 0);
            let mut all = true;
            for _ in 0..combos {
                for j in 0..counts.len() {
                    base[j] = x[offsets[j] + choice[j]];
                }
                if !r.contains(&base) {
                    all = false;
                    break;
                }
                for j in (0..counts.len()).rev() {
                    choice[j] += 1;
                    if choice[j] < counts[j] {
                        break;
                    }
                    choice[j] = 0;
                }
            }
            mask[flat] = all;
        });
        mask
    };
    Relation::from_mask(out, &mask)
}

//! Seeded instance generators.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::decomp::{BooleanCylinderExpr, CylinderLeaf, Expr};
use crate::error::{invalid, Error, Result};
use crate::rng::{self, STREAM_BERNOULLI, STREAM_BOOLEAN_COMBINATION, STREAM_PARITY};
use crate::space::{Grid, MeasuredFunction, Part, PartiteSpace, Relation, Signature};

/// Largest witness part the membership gadget may allocate.
pub const GADGET_MAX_WITNESSES: usize = 1 << 16;
/// Largest tensor the membership gadget may allocate.
pub const GADGET_MAX_CELLS: usize = 1 << 22;

/// `E(x, b) = [x ∈ b]` where `x` ranges over `[d]^k` and `b` over all subsets
/// of `[d]^k`, encoded as bit masks of the row-major index of `x`.
pub fn membership_gadget(d: usize, k: usize) -> Result<MeasuredFunction> {
    if d == 0 || k == 0 {
        return Err(invalid!("membership gadget needs d >= 1 and k >= 1"));
    }
    let g = d
        .checked_pow(k as u32)
        .filter(|&g| g < usize::BITS as usize)
        .ok_or_else(|| Error::ResourceLimit(format!("grid [{d}]^{k} too large")))?;
    let witnesses = 1usize << g;
    if witnesses > GADGET_MAX_WITNESSES || witnesses * g > GADGET_MAX_CELLS {
        return Err(Error::ResourceLimit(format!(
            "membership gadget with {witnesses} witnesses exceeds the size cap"
        )));
    }
    let mut parts: Vec<Part> = (0..k).map(|i| Part::uniform(format!("x{i}"), d)).collect();
    parts.push(Part::uniform("subsets", witnesses));
    let space = PartiteSpace::new(parts)?;
    let grid = Grid::new(space, Signature::new((0..=k).collect()))?;
    let mut values = vec![0.0; grid.len()];
    // the witness axis is last, so flat = x_index * witnesses + b
    for (flat, v) in values.iter_mut().enumerate() {
        let (x, b) = (flat / witnesses, flat % witnesses);
        *v = (b >> x & 1) as f64;
    }
    MeasuredFunction::new(grid, values)
}

/// i.i.d. Bernoulli(`p`) relation on `grid`.
pub fn quasirandom(grid: &Grid, p: f64, seed: u64) -> Result<Relation> {
    let mut rng = rng::stream(seed, STREAM_BERNOULLI);
    bernoulli(grid, p, &mut rng)
}

pub(crate) fn bernoulli(grid: &Grid, p: f64, rng: &mut ChaCha8Rng) -> Result<Relation> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid!("probability {p} outside [0,1]"));
    }
    let mask: Vec<bool> = (0..grid.len()).map(|_| rng.gen::<f64>() < p).collect();
    Relation::from_mask(grid.clone(), &mask)
}

/// A relation built from random low-arity cylinders, with its generators.
#[derive(Clone, Debug)]
pub struct BooleanCombination {
    pub relation: Relation,
    pub expr: BooleanCylinderExpr,
}

/// Random Boolean combination of `m` random `(<= k)`-ary cylinder sets on a
/// `k_prime`-ary grid with one part per coordinate.
pub fn boolean_of_lower_arity(
    k_prime: usize,
    k: usize,
    m: usize,
    sizes: &[usize],
    seed: u64,
) -> Result<BooleanCombination> {
    if k == 0 || k > k_prime {
        return Err(invalid!("need 1 <= k <= k' (k={k}, k'={k_prime})"));
    }
    if sizes.len() != k_prime || sizes.contains(&0) {
        return Err(invalid!("need {k_prime} positive part sizes, got {sizes:?}"));
    }
    let space = PartiteSpace::uniform(sizes)?;
    let grid = Grid::new(space, Signature::new((0..k_prime).collect()))?;
    let mut rng = rng::stream(seed, STREAM_BOOLEAN_COMBINATION);

    let mut leaves = Vec::with_capacity(m);
    for i in 0..m {
        let size = rng.gen_range(1..=k);
        let mut positions = sample(&mut rng, k_prime, size).into_vec();
        positions.sort_unstable();
        let sub = grid.sub_grid(&positions)?;
        let relation = bernoulli(&sub, 0.5, &mut rng)?;
        leaves.push(CylinderLeaf {
            name: format!("L{i}@{}", crate::fibalg::fmt_list(&positions)),
            positions,
            relation,
        });
    }

    let literal = |i: usize, rng: &mut ChaCha8Rng| {
        if rng.gen::<bool>() {
            Expr::not(Expr::Leaf(i))
        } else {
            Expr::Leaf(i)
        }
    };
    let expr = if m == 0 {
        Expr::Const(rng.gen())
    } else {
        let mut e = literal(0, &mut rng);
        for i in 1..m {
            let leaf = literal(i, &mut rng);
            e = match rng.gen_range(0..3) {
                0 => Expr::and(e, leaf),
                1 => Expr::or(e, leaf),
                _ => Expr::xor(e, leaf),
            };
        }
        e
    };
    let expr = BooleanCylinderExpr::new(grid, leaves, expr)?;
    Ok(BooleanCombination {
        relation: expr.to_relation()?,
        expr,
    })
}

/// `E(x,y,z) = F(x,y) ⊕ G(x,z) ⊕ H(y,z)` with its three binary layers.
#[derive(Clone, Debug)]
pub struct ParityTriple {
    pub e: Relation,
    pub f: Relation,
    pub g: Relation,
    pub h: Relation,
}

/// Random binary layers on `[n]^3`.
pub fn parity_triple(n: usize, seed: u64) -> Result<ParityTriple> {
    if n == 0 {
        return Err(invalid!("parity triple needs n >= 1"));
    }
    let grid = Grid::new(PartiteSpace::uniform(&[n, n, n])?, Signature::new(vec![0, 1, 2]))?;
    let mut rng = rng::stream(seed, STREAM_PARITY);
    let f = bernoulli(&grid.sub_grid(&[0, 1])?, 0.5, &mut rng)?;
    let g = bernoulli(&grid.sub_grid(&[0, 2])?, 0.5, &mut rng)?;
    let h = bernoulli(&grid.sub_grid(&[1, 2])?, 0.5, &mut rng)?;
    parity_from_layers(&grid, f, g, h)
}

/// Builds the parity relation from given layers on the coordinate pairs
/// `(0,1)`, `(0,2)`, `(1,2)` of a ternary grid.
pub fn parity_from_layers(grid: &Grid, f: Relation, g: Relation, h: Relation) -> Result<ParityTriple> {
    if grid.arity() != 3 {
        return Err(invalid!("parity relations are ternary"));
    }
    for (r, pos) in [(&f, [0, 1]), (&g, [0, 2]), (&h, [1, 2])] {
        if !r.grid().same_as(&grid.sub_grid(&pos)?) {
            return Err(invalid!("layer on {pos:?} lives on the wrong grid"));
        }
    }
    let e = Relation::from_fn(grid.clone(), |p| {
        f.contains(&[p[0], p[1]]) ^ g.contains(&[p[0], p[2]]) ^ h.contains(&[p[1], p[2]])
    });
    Ok(ParityTriple { e, f, g, h })
}

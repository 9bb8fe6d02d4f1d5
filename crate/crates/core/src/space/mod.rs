//! Finite measured multipartite ground sets and functions on their products.
//!
//! A [`PartiteSpace`] stores one atomic probability measure per part. Every
//! product measure on `V_{c_1} x ... x V_{c_n}` is derived from those weights
//! on demand, so a [`Signature`] (the ordered list of part indices, repeats
//! allowed) is all that is needed to describe a grid.

mod function;
mod ops;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use function::{MeasuredFunction, Relation};
pub(crate) use function::l2_distance_raw;
pub use ops::{
    average_out, bounded_arith, box_power, continuous_combine, cylinder_extend, fiber, level_set,
    permute, pointwise_product, ArithOp, LevelMode,
};

/// Tolerance on the total mass of each part.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Pointwise tolerance on function ranges at construction.
pub const POINTWISE_TOL: f64 = 1e-12;

/// One vertex part with its atomic probability measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    pub size: usize,
    pub weights: Vec<f64>,
}

impl Part {
    pub fn uniform(name: impl Into<String>, size: usize) -> Self {
        Part {
            name: name.into(),
            size,
            weights: vec![1.0 / size.max(1) as f64; size],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(invalid!("part {:?} has size 0", self.name));
        }
        if self.weights.len() != self.size {
            return Err(invalid!(
                "part {:?} has size {} but {} weights",
                self.name,
                self.size,
                self.weights.len()
            ));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(invalid!("part {:?} has invalid weight {w}", self.name));
        }
        let total = crate::numeric::csum(self.weights.iter().copied());
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(invalid!(
                "weights of part {:?} sum to {total}, expected 1",
                self.name
            ));
        }
        Ok(())
    }
}

/// A finite partite probability space: the parts `V_1, ..., V_m` and their
/// measures.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartiteSpace {
    parts: Vec<Part>,
}

impl PartiteSpace {
    pub fn new(parts: Vec<Part>) -> Result<Arc<Self>> {
        for (i, p) in parts.iter().enumerate() {
            p.validate()?;
            if parts[..i].iter().any(|q| q.name == p.name) {
                return Err(invalid!("duplicate part name {:?}", p.name));
            }
        }
        Ok(Arc::new(PartiteSpace { parts }))
    }

    /// Uniform measures on parts named `V1, V2, ...` with the given sizes.
    pub fn uniform(sizes: &[usize]) -> Result<Arc<Self>> {
        Self::new(
            sizes
                .iter()
                .enumerate()
                .map(|(i, &n)| Part::uniform(format!("V{}", i + 1), n))
                .collect(),
        )
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn part(&self, index: usize) -> &Part {
        &self.parts[index]
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn part_size(&self, index: usize) -> usize {
        self.parts[index].size
    }

    /// Copy of this space with the weights of one part replaced.
    pub fn with_weights(&self, part: usize, weights: Vec<f64>) -> Result<Arc<Self>> {
        if part >= self.parts.len() {
            return Err(invalid!("part index {part} out of range"));
        }
        let mut parts = self.parts.clone();
        parts[part].weights = weights;
        Self::new(parts)
    }
}

impl<'de> Deserialize<'de> for PartiteSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            parts: Vec<Part>,
        }
        let raw = Raw::deserialize(d)?;
        let space = PartiteSpace::new(raw.parts).map_err(serde::de::Error::custom)?;
        Ok(Arc::try_unwrap(space).unwrap_or_else(|a| (*a).clone()))
    }
}

/// Ordered coordinates of a product, each naming a part. `(0, 0, 1)` is
/// `V_1^2 x V_2`. No reordering is ever applied.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signature(pub Vec<usize>);

impl Signature {
    pub fn new(coords: Vec<usize>) -> Self {
        Signature(coords)
    }

    /// One coordinate per part, in part order: the signature `1^k`.
    pub fn ones(k: usize) -> Self {
        Signature((0..k).collect())
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    /// Count of coordinates per part (the multi-index `n̄`).
    pub fn degree_vector(&self, num_parts: usize) -> Vec<usize> {
        let mut n = vec![0; num_parts];
        for &c in &self.0 {
            if c < num_parts {
                n[c] += 1;
            }
        }
        n
    }
}

/// A signature bound to a space: the index set of a dense tensor.
#[derive(Clone, Debug)]
pub struct Grid {
    space: Arc<PartiteSpace>,
    signature: Signature,
    shape: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl Grid {
    pub fn new(space: Arc<PartiteSpace>, signature: Signature) -> Result<Self> {
        let mut shape = Vec::with_capacity(signature.arity());
        for &c in signature.coords() {
            if c >= space.num_parts() {
                return Err(invalid!(
                    "signature refers to part {c} but the space has {} parts",
                    space.num_parts()
                ));
            }
            shape.push(space.part_size(c));
        }
        let mut strides = vec![1; shape.len()];
        for i in (0..shape.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        let len = shape.iter().product();
        Ok(Grid {
            space,
            signature,
            shape,
            strides,
            len,
        })
    }

    pub fn space(&self) -> &Arc<PartiteSpace> {
        &self.space
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn arity(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Part index of coordinate `axis`.
    pub fn part_of(&self, axis: usize) -> usize {
        self.signature.0[axis]
    }

    pub fn axis_weights(&self, axis: usize) -> &[f64] {
        &self.space.part(self.part_of(axis)).weights
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.signature == other.signature
            && (Arc::ptr_eq(&self.space, &other.space) || self.space == other.space)
    }

    pub fn check_point(&self, point: &[usize]) -> Result<()> {
        if point.len() != self.arity() {
            return Err(invalid!(
                "point has {} coordinates, grid has arity {}",
                point.len(),
                self.arity()
            ));
        }
        for (axis, (&v, &n)) in point.iter().zip(&self.shape).enumerate() {
            if v >= n {
                return Err(invalid!("vertex {v} out of range on axis {axis} (size {n})"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn flat_index(&self, point: &[usize]) -> usize {
        point.iter().zip(&self.strides).map(|(p, s)| p * s).sum()
    }

    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for (o, &s) in out.iter_mut().zip(&self.strides) {
            *o = flat / s;
            flat %= s;
        }
    }

    pub fn point(&self, flat: usize) -> Vec<usize> {
        let mut p = vec![0; self.arity()];
        self.unravel(flat, &mut p);
        p
    }

    /// Visits every point in row-major order (last coordinate fastest).
    pub fn for_each_point(&self, mut visit: impl FnMut(usize, &[usize])) {
        if self.len == 0 {
            return;
        }
        let mut point = vec![0usize; self.arity()];
        for flat in 0..self.len {
            visit(flat, &point);
            for axis in (0..point.len()).rev() {
                point[axis] += 1;
                if point[axis] < self.shape[axis] {
                    break;
                }
                point[axis] = 0;
            }
        }
    }

    /// Product-measure mass of a single point.
    pub fn point_mass(&self, point: &[usize]) -> f64 {
        point
            .iter()
            .enumerate()
            .map(|(axis, &v)| self.axis_weights(axis)[v])
            .product()
    }

    /// Dense vector of point masses in row-major order.
    pub fn point_masses(&self) -> Vec<f64> {
        let mut out = vec![1.0; self.len];
        // multiply in one axis at a time
        for axis in 0..self.arity() {
            let w = self.axis_weights(axis);
            let stride = self.strides[axis];
            let n = self.shape[axis];
            for (flat, o) in out.iter_mut().enumerate() {
                *o *= w[(flat / stride) % n];
            }
        }
        out
    }

    /// Grid over a subset of this grid's coordinates, in the given order.
    pub fn sub_grid(&self, positions: &[usize]) -> Result<Grid> {
        let mut coords = Vec::with_capacity(positions.len());
        for &p in positions {
            if p >= self.arity() {
                return Err(invalid!("position {p} out of range for arity {}", self.arity()));
            }
            coords.push(self.signature.0[p]);
        }
        Grid::new(self.space.clone(), Signature(coords))
    }

    /// The same signature over a different space with identical part sizes.
    pub fn rehome(&self, space: Arc<PartiteSpace>) -> Result<Grid> {
        if space.num_parts() != self.space.num_parts()
            || (0..space.num_parts()).any(|i| space.part_size(i) != self.space.part_size(i))
        {
            return Err(invalid!("replacement space has different part sizes"));
        }
        Grid::new(space, self.signature.clone())
    }
}

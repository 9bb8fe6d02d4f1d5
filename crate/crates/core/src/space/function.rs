use std::sync::Arc;

use super::{Grid, PartiteSpace, Signature, POINTWISE_TOL};
use crate::error::{invalid, Error, Result};
use crate::numeric::{csum, CompensatedSum};

/// A dense real tensor on a [`Grid`].
///
/// Ordinary functions take values in `[0,1]`. Signed functions take values
/// in `[-1,1]` and exist for quantities like `f - c` and dual functions.
#[derive(Clone, Debug)]
pub struct MeasuredFunction {
    grid: Grid,
    values: Vec<f64>,
    signed: bool,
}

fn check_range(values: &mut [f64], lo: f64, hi: f64) -> Result<()> {
    for (i, v) in values.iter_mut().enumerate() {
        if !v.is_finite() || *v < lo - POINTWISE_TOL || *v > hi + POINTWISE_TOL {
            return Err(invalid!("value {v} at flat index {i} outside [{lo}, {hi}]"));
        }
        *v = v.clamp(lo, hi);
    }
    Ok(())
}

impl MeasuredFunction {
    /// A `[0,1]`-valued function; values within 1e-12 of the range are
    /// clamped onto it.
    pub fn new(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid!(
                "expected {} values for shape {:?}, got {}",
                grid.len(),
                grid.shape(),
                values.len()
            ));
        }
        check_range(&mut values, 0.0, 1.0)?;
        Ok(MeasuredFunction {
            grid,
            values,
            signed: false,
        })
    }

    /// A `[-1,1]`-valued function.
    pub fn new_signed(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            ));
        }
        check_range(&mut values, -1.0, 1.0)?;
        Ok(MeasuredFunction {
            grid,
            values,
            signed: true,
        })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut values = vec![0.0; grid.len()];
        grid.for_each_point(|flat, p| values[flat] = f(p));
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        let values = vec![c; grid.len()];
        Self::new(grid, values)
    }

    /// Convenience constructor on `space` with `signature`.
    pub fn on(space: &Arc<PartiteSpace>, signature: &[usize], values: Vec<f64>) -> Result<Self> {
        Self::new(Grid::new(space.clone(), Signature(signature.to_vec()))?, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> &Arc<PartiteSpace> {
        self.grid.space()
    }

    pub fn signature(&self) -> &Signature {
        self.grid.signature()
    }

    pub fn arity(&self) -> usize {
        self.grid.arity()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    #[inline]
    pub fn value(&self, point: &[usize]) -> f64 {
        self.values[self.grid.flat_index(point)]
    }

    pub fn get(&self, point: &[usize]) -> Result<f64> {
        self.grid.check_point(point)?;
        Ok(self.value(point))
    }

    /// True when every value is exactly 0 or 1.
    pub fn is_boolean(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Same values on a space with the same part sizes but other weights.
    pub fn with_space(&self, space: Arc<PartiteSpace>) -> Result<Self> {
        Ok(MeasuredFunction {
            grid: self.grid.rehome(space)?,
            values: self.values.clone(),
            signed: self.signed,
        })
    }

    /// Pointwise map into a signed function (`[-1,1]`).
    pub fn map_signed(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new_signed(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise map into an unsigned function (`[0,1]`).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// `f - c` as a signed function.
    pub fn centered(&self, c: f64) -> Result<Self> {
        self.map_signed(|v| v - c)
    }

    pub fn ensure_same_grid(&self, other: &MeasuredFunction) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(invalid!(
                "signature mismatch: {:?} vs {:?}",
                self.signature().0,
                other.signature().0
            ));
        }
        Ok(())
    }

    /// `∫ f dμ` against the product measure.
    pub fn integral(&self) -> f64 {
        let w = self.grid.point_masses();
        csum(w.iter().zip(&self.values).map(|(w, v)| w * v))
    }

    /// `⟨f, g⟩ = ∫ f g dμ`.
    pub fn inner(&self, other: &MeasuredFunction) -> Result<f64> {
        self.ensure_same_grid(other)?;
        let w = self.grid.point_masses();
        let mut acc = CompensatedSum::new();
        for ((w, a), b) in w.iter().zip(&self.values).zip(&other.values) {
            acc.add(w * a * b);
        }
        Ok(acc.value())
    }

    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.point_masses();
        csum(w.iter().zip(&self.values).map(|(w, v)| w * v * v))
            .max(0.0)
            .sqrt()
    }

    /// `‖f - g‖_{L²(μ)}`.
    pub fn l2_distance(&self, other: &MeasuredFunction) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(l2_distance_raw(&self.grid, &self.values, &other.values))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>, signed: bool) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        MeasuredFunction {
            grid,
            values,
            signed,
        }
    }
}

pub(crate) fn l2_distance_raw(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let w = grid.point_masses();
    let mut acc = CompensatedSum::new();
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc.add(w[i] * d * d);
    }
    acc.value().max(0.0).sqrt()
}

impl PartialEq for MeasuredFunction {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid) && self.values == other.values && self.signed == other.signed
    }
}

/// A `{0,1}`-valued function: a relation on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Relation(MeasuredFunction);

impl Relation {
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[usize]) -> bool) -> Self {
        let mut values = vec![0.0; grid.len()];
        grid.for_each_point(|flat, p| {
            if f(p) {
                values[flat] = 1.0;
            }
        });
        Relation(MeasuredFunction::from_parts_unchecked(grid, values, false))
    }

    pub fn from_mask(grid: Grid, mask: &[bool]) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(invalid!("mask length {} != grid size {}", mask.len(), grid.len()));
        }
        let values = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Ok(Relation(MeasuredFunction::from_parts_unchecked(grid, values, false)))
    }

    pub fn empty(grid: Grid) -> Self {
        Self::from_fn(grid, |_| false)
    }

    pub fn full(grid: Grid) -> Self {
        Self::from_fn(grid, |_| true)
    }

    pub fn grid(&self) -> &Grid {
        self.0.grid()
    }

    pub fn function(&self) -> &MeasuredFunction {
        &self.0
    }

    pub fn into_function(self) -> MeasuredFunction {
        self.0
    }

    pub fn arity(&self) -> usize {
        self.0.arity()
    }

    #[inline]
    pub fn contains(&self, point: &[usize]) -> bool {
        self.0.value(point) == 1.0
    }

    #[inline]
    pub fn contains_flat(&self, flat: usize) -> bool {
        self.0.values[flat] == 1.0
    }

    pub fn mask(&self) -> Vec<bool> {
        self.0.values.iter().map(|&v| v == 1.0).collect()
    }

    /// `μ(E)`.
    pub fn measure(&self) -> f64 {
        self.0.integral()
    }

    /// Fraction of grid points in the relation (ignores weights).
    pub fn density(&self) -> f64 {
        self.0.values.iter().filter(|&&v| v == 1.0).count() as f64 / self.0.grid.len() as f64
    }

    pub fn count(&self) -> usize {
        self.0.values.iter().filter(|&&v| v == 1.0).count()
    }

    pub fn complement(&self) -> Relation {
        let values = self.0.values.iter().map(|&v| 1.0 - v).collect();
        Relation(MeasuredFunction::from_parts_unchecked(
            self.0.grid.clone(),
            values,
            false,
        ))
    }

    pub fn with_space(&self, space: Arc<PartiteSpace>) -> Result<Self> {
        Ok(Relation(self.0.with_space(space)?))
    }

    /// `μ(E △ F)`.
    pub fn symmetric_difference(&self, other: &Relation) -> Result<f64> {
        self.0.ensure_same_grid(&other.0)?;
        let w = self.grid().point_masses();
        Ok(csum(
            (0..w.len())
                .filter(|&i| self.0.values[i] != other.0.values[i])
                .map(|i| w[i]),
        ))
    }
}

impl TryFrom<MeasuredFunction> for Relation {
    type Error = Error;

    fn try_from(f: MeasuredFunction) -> Result<Self> {
        if f.signed || !f.is_boolean() {
            return Err(invalid!("function is not {{0,1}}-valued"));
        }
        Ok(Relation(f))
    }
}

impl From<Relation> for MeasuredFunction {
    fn from(r: Relation) -> Self {
        r.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(sizes: &[usize], sig: &[usize]) -> Grid {
        Grid::new(PartiteSpace::uniform(sizes).unwrap(), Signature(sig.to_vec())).unwrap()
    }

    #[test]
    fn construction_enforces_unit_range() {
        let g = grid(&[2], &[0]);
        assert!(MeasuredFunction::new(g.clone(), vec![0.5, 1.1]).is_err());
        assert!(MeasuredFunction::new(g.clone(), vec![0.5]).is_err());
        let f = MeasuredFunction::new(g.clone(), vec![-1e-13, 1.0 + 1e-13]).unwrap();
        assert_eq!(f.values(), &[0.0, 1.0]);
        assert!(MeasuredFunction::new(g.clone(), vec![f64::NAN, 0.0]).is_err());
        assert!(MeasuredFunction::new_signed(g, vec![-0.5, 0.5]).is_ok());
    }

    #[test]
    fn integral_uses_product_measure() {
        let space = PartiteSpace::new(vec![super::super::Part {
            name: "A".into(),
            size: 2,
            weights: vec![0.25, 0.75],
        }])
        .unwrap();
        let f = MeasuredFunction::on(&space, &[0, 0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((f.integral() - (0.0625 + 0.5625)).abs() < 1e-15);
    }

    #[test]
    fn relation_round_trip() {
        let g = grid(&[3, 3], &[0, 1]);
        let eq = Relation::from_fn(g.clone(), |p| p[0] == p[1]);
        assert_eq!(eq.count(), 3);
        assert!((eq.measure() - 1.0 / 3.0).abs() < 1e-15);
        let back = Relation::try_from(eq.clone().into_function()).unwrap();
        assert_eq!(back, eq);
        let half = MeasuredFunction::constant(g, 0.5).unwrap();
        assert!(Relation::try_from(half).is_err());
        assert!((eq.symmetric_difference(&eq.complement()).unwrap() - 1.0).abs() < 1e-15);
    }
}

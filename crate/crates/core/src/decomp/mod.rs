//! Low-arity cylinder decompositions: weighted sums of products of
//! `(<= k)`-ary factors, and Boolean combinations of `(<= k)`-ary fibers.

mod boolean;
mod fibers;
mod weighted;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{self, CompensatedSum};
use crate::space::{cylinder_extend, Grid, MeasuredFunction, Relation, Signature};

pub use boolean::{fit_boolean_cylinders, sampled_pool, FiberPool};
pub use fibers::{approx_by_fibers, FiberApproximation};
pub use weighted::fit_weighted_cylinders;

/// Summary of a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// L² error (weighted fits) or measure of the symmetric difference.
    pub error: f64,
    /// Number of terms or leaf occurrences.
    pub n_terms: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Error of the best constant approximant.
    pub baseline: f64,
}

/// A Boolean expression over numbered leaves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Const(bool),
    Leaf(usize),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    pub fn not(e: Expr) -> Expr {
        match e {
            Expr::Const(b) => Expr::Const(!b),
            Expr::Not(inner) => *inner,
            other => Expr::Not(Box::new(other)),
        }
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(false), _) | (_, Expr::Const(false)) => Expr::Const(false),
            (Expr::Const(true), x) | (x, Expr::Const(true)) => x,
            (Expr::And(mut xs), Expr::And(ys)) => {
                xs.extend(ys);
                Expr::And(xs)
            }
            (Expr::And(mut xs), y) => {
                xs.push(y);
                Expr::And(xs)
            }
            (x, y) => Expr::And(vec![x, y]),
        }
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(true), _) | (_, Expr::Const(true)) => Expr::Const(true),
            (Expr::Const(false), x) | (x, Expr::Const(false)) => x,
            (Expr::Or(mut xs), Expr::Or(ys)) => {
                xs.extend(ys);
                Expr::Or(xs)
            }
            (Expr::Or(mut xs), y) => {
                xs.push(y);
                Expr::Or(xs)
            }
            (x, y) => Expr::Or(vec![x, y]),
        }
    }

    pub fn xor(a: Expr, b: Expr) -> Expr {
        Expr::or(
            Expr::and(a.clone(), Expr::not(b.clone())),
            Expr::and(Expr::not(a), b),
        )
    }

    /// `if c then yes else no`
    pub fn ite(c: Expr, yes: Expr, no: Expr) -> Expr {
        match (&yes, &no) {
            (Expr::Const(true), Expr::Const(false)) => c,
            (Expr::Const(false), Expr::Const(true)) => Expr::not(c),
            _ => Expr::or(Expr::and(c.clone(), yes), Expr::and(Expr::not(c), no)),
        }
    }

    /// Number of leaf occurrences.
    pub fn leaf_count(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Leaf(_) => 1,
            Expr::Not(e) => e.leaf_count(),
            Expr::And(xs) | Expr::Or(xs) => xs.iter().map(Expr::leaf_count).sum(),
        }
    }

    fn max_leaf(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Leaf(i) => Some(*i),
            Expr::Not(e) => e.max_leaf(),
            Expr::And(xs) | Expr::Or(xs) => xs.iter().filter_map(Expr::max_leaf).max(),
        }
    }

    /// Evaluates with leaf values supplied by `leaf`.
    pub fn eval(&self, leaf: &impl Fn(usize) -> Result<bool>) -> Result<bool> {
        Ok(match self {
            Expr::Const(b) => *b,
            Expr::Leaf(i) => leaf(*i)?,
            Expr::Not(e) => !e.eval(leaf)?,
            Expr::And(xs) => {
                for x in xs {
                    if !x.eval(leaf)? {
                        return Ok(false);
                    }
                }
                true
            }
            Expr::Or(xs) => {
                for x in xs {
                    if x.eval(leaf)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }
}

/// A relation on the coordinates `positions` of a larger grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderLeaf {
    pub name: String,
    pub positions: Vec<usize>,
    pub relation: Relation,
}

impl CylinderLeaf {
    /// Membership mask on the full grid.
    pub fn extend(&self, grid: &Grid) -> Result<Vec<bool>> {
        let ext = cylinder_extend(self.relation.function(), &self.positions, grid)?;
        Ok(ext.values().iter().map(|&v| v >= 0.5).collect())
    }
}

/// A Boolean combination of cylinder leaves on a target grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BooleanCylinderExpr {
    pub grid: Grid,
    pub leaves: Vec<CylinderLeaf>,
    pub expr: Expr,
}

impl BooleanCylinderExpr {
    pub fn new(grid: Grid, leaves: Vec<CylinderLeaf>, expr: Expr) -> Result<Self> {
        let out = BooleanCylinderExpr { grid, leaves, expr };
        out.check_leaves()?;
        for l in &out.leaves {
            l.extend(&out.grid)?;
        }
        Ok(out)
    }

    fn check_leaves(&self) -> Result<()> {
        match self.expr.max_leaf() {
            Some(i) if i >= self.leaves.len() => Err(Error::InvalidState(format!(
                "expression refers to leaf {i}, registry has {}",
                self.leaves.len()
            ))),
            _ => Ok(()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.expr.leaf_count()
    }

    pub fn evaluate(&self, point: &[usize]) -> Result<bool> {
        self.grid.check_point(point)?;
        self.expr.eval(&|i| {
            let leaf = self.leaves.get(i).ok_or_else(|| {
                Error::InvalidState(format!("leaf {i} does not resolve"))
            })?;
            let sub: Vec<usize> = leaf.positions.iter().map(|&p| point[p]).collect();
            Ok(leaf.relation.contains(&sub))
        })
    }

    pub fn to_relation(&self) -> Result<Relation> {
        self.check_leaves()?;
        let masks: Vec<Vec<bool>> = self
            .leaves
            .iter()
            .map(|l| l.extend(&self.grid))
            .collect::<Result<_>>()?;
        let mut mask = vec![false; self.grid.len()];
        for (p, m) in mask.iter_mut().enumerate() {
            *m = self.expr.eval(&|i| Ok(masks[i][p]))?;
        }
        Relation::from_mask(self.grid.clone(), &mask)
    }

    /// `μ(E △ F)`.
    pub fn sym_diff(&self, e: &Relation) -> Result<f64> {
        e.symmetric_difference(&self.to_relation()?)
    }
}

/// One factor `f_I` of a product term.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub positions: Vec<usize>,
    pub values: MeasuredFunction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CylinderTerm {
    pub gamma: f64,
    pub factors: Vec<Factor>,
}

/// `g(x) = Σ_i γ_i Π_I f^i_I(x_I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderDecomposition {
    pub grid: Grid,
    /// Largest factor arity allowed.
    pub k: usize,
    pub terms: Vec<CylinderTerm>,
}

impl CylinderDecomposition {
    pub fn new(grid: Grid, k: usize, terms: Vec<CylinderTerm>) -> Result<Self> {
        for t in &terms {
            if !(0.0..=1.0).contains(&t.gamma) {
                return Err(invalid!("coefficient {} outside [0,1]", t.gamma));
            }
            for f in &t.factors {
                if f.positions.len() > k {
                    return Err(invalid!("factor on {:?} has arity above {k}", f.positions));
                }
                // validates positions and parts
                cylinder_extend(&f.values, &f.positions, &grid)?;
            }
        }
        Ok(CylinderDecomposition { grid, k, terms })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Range `[0, Σ γ_i]` that every value lies in.
    pub fn bounds(&self) -> (f64, f64) {
        (0.0, numeric::csum(self.terms.iter().map(|t| t.gamma)))
    }

    pub fn evaluate(&self, point: &[usize]) -> Result<f64> {
        self.grid.check_point(point)?;
        let mut acc = CompensatedSum::new();
        for t in &self.terms {
            let mut prod = t.gamma;
            for f in &t.factors {
                let sub: Vec<usize> = f.positions.iter().map(|&p| point[p]).collect();
                prod *= f.values.value(&sub);
            }
            acc.add(prod);
        }
        Ok(acc.value())
    }

    /// Dense row-major values.
    pub fn values(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.grid.for_each_point(|flat, x| {
            out[flat] = self.evaluate(x).unwrap_or(f64::NAN);
        });
        out
    }

    /// The decomposition as a `[0,1]`-valued function; fails if some value
    /// leaves `[0,1]`.
    pub fn to_function(&self) -> Result<MeasuredFunction> {
        MeasuredFunction::new(self.grid.clone(), self.values())
    }

    pub fn l2_error(&self, f: &MeasuredFunction) -> Result<f64> {
        if !f.grid().same_as(&self.grid) {
            return Err(invalid!("function and decomposition live on different grids"));
        }
        Ok(crate::space::l2_distance_raw(&self.grid, f.values(), &self.values()))
    }

    /// Rounds every coefficient to the dyadic grid of height `t`.
    pub fn round_coefficients(&self, t: u32) -> Self {
        let mut out = self.clone();
        for term in &mut out.terms {
            term.gamma = numeric::round_dyadic(term.gamma, t);
        }
        out
    }

    pub fn to_doc(&self) -> DecompositionDoc {
        DecompositionDoc {
            signature: self.grid.signature().clone(),
            k: self.k,
            terms: self
                .terms
                .iter()
                .map(|t| TermDoc {
                    gamma: t.gamma,
                    factors: t
                        .factors
                        .iter()
                        .map(|f| FactorDoc {
                            positions: f.positions.clone(),
                            values: f.values.values().to_vec(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &DecompositionDoc, space: std::sync::Arc<crate::space::PartiteSpace>) -> Result<Self> {
        let grid = Grid::new(space, doc.signature.clone())?;
        let terms = doc
            .terms
            .iter()
            .map(|t| {
                let factors = t
                    .factors
                    .iter()
                    .map(|f| {
                        let sub = grid.sub_grid(&f.positions)?;
                        Ok(Factor {
                            positions: f.positions.clone(),
                            values: MeasuredFunction::new(sub, f.values.clone())?,
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(CylinderTerm {
                    gamma: t.gamma,
                    factors,
                })
            })
            .collect::<Result<_>>()?;
        CylinderDecomposition::new(grid, doc.k, terms)
    }
}

/// JSON form of a decomposition; the space travels separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionDoc {
    pub signature: Signature,
    pub k: usize,
    pub terms: Vec<TermDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub gamma: f64,
    pub factors: Vec<FactorDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorDoc {
    pub positions: Vec<usize>,
    pub values: Vec<f64>,
}

/// JSON form of a Boolean cylinder expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BooleanExprDoc {
    pub signature: Signature,
    pub leaves: Vec<LeafDoc>,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafDoc {
    pub name: String,
    pub positions: Vec<usize>,
    /// Row-major membership over the leaf's coordinates.
    pub members: Vec<bool>,
}

impl BooleanCylinderExpr {
    pub fn to_doc(&self) -> BooleanExprDoc {
        BooleanExprDoc {
            signature: self.grid.signature().clone(),
            leaves: self
                .leaves
                .iter()
                .map(|l| LeafDoc {
                    name: l.name.clone(),
                    positions: l.positions.clone(),
                    members: l.relation.mask(),
                })
                .collect(),
            expr: self.expr.clone(),
        }
    }

    pub fn from_doc(doc: &BooleanExprDoc, space: std::sync::Arc<crate::space::PartiteSpace>) -> Result<Self> {
        let grid = Grid::new(space, doc.signature.clone())?;
        let leaves = doc
            .leaves
            .iter()
            .map(|l| {
                let sub = grid.sub_grid(&l.positions)?;
                Ok(CylinderLeaf {
                    name: l.name.clone(),
                    positions: l.positions.clone(),
                    relation: Relation::from_mask(sub, &l.members)?,
                })
            })
            .collect::<Result<_>>()?;
        BooleanCylinderExpr::new(grid, leaves, doc.expr.clone())
    }
}

//! Finite, computable versions of higher-arity VC dimension, partite box
//! norms and low-arity cylinder decompositions on measured hypergraphs.

pub mod error;
pub mod numeric;
pub mod rng;
pub mod space;
pub mod adversary;
pub mod decomp;
pub mod fibalg;
pub mod gen;
pub mod gowers;
pub mod io;
pub mod vck;

pub use error::{Error, Result};
pub use space::{Grid, MeasuredFunction, Part, PartiteSpace, Relation, Signature};

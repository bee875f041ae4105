//! Exact lattice and chamber geometry for the second-cohomology lattice of a
//! hyperkähler manifold.

pub mod arith;
pub mod catalog;
pub mod chambers;
pub mod enumeration;
pub mod error;
pub mod feasibility;
pub mod lattice;
pub mod linalg;
pub mod orbits;
pub mod vector;

pub use error::{Error, Result};
pub use lattice::{Lattice, Signature};
pub use vector::{LatticeVector, RationalVector};

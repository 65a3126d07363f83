//! Exact-diagonalization laboratory for Gibbs states of finite spin lattices.
//!
//! Dense operators live on regions of a [`Lattice`]; tensor factors follow the
//! lattice's lexicographic site order, with the first site most significant.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod error;
pub mod experiments;
pub mod gibbs;
pub mod interactions;
pub mod lattice;
pub mod liebrobinson;
pub mod pauli;
pub mod qbp;
pub mod quadrature;

pub use algebra::{DensityMatrix, LocalOperator, Mat, Spectrum, Tolerances, C64};
pub use error::{Error, Result};
pub use lattice::{Distance, Lattice, Region};

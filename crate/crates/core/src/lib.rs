//! Quantum speed limits for multipartite Hamiltonians: the unconstrained
//! bound from the spectral range, the bound for evolutions confined to
//! separable (product) states, and the dynamics needed to compare both.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod models;
pub mod spaces;
pub mod speedlimits;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, EigenDecomposition, HermitianOperator, C64};
pub use spaces::{EnergyStats, ProductState, PureState, SeparableEnsemble, SpaceDescriptor};

//! Windowed ℓ^p dimension of translation-invariant subspaces over concrete
//! amenable groups.
//!
//! The crate is organised bottom-up: [`groups`] supplies the groups and
//! their Følner windows, [`tiling`] the boundary and packing combinatorics,
//! [`spaces`] symbolic invariant subspaces with finite window surrogates,
//! [`widths`] the finite-dimensional width machinery, and [`dimension`]
//! assembles everything into dimension estimates and a property suite.

pub mod error;
pub mod groups;
pub mod tiling;
pub mod spaces;
pub mod widths;
pub mod dimension;
mod linalg;

pub use error::{Error, Result};
pub use groups::{FiniteSubset, GroupElement, GroupSpec, GroupStructure};

//! Discontinuous Galerkin solvers for two-dimensional Riemann–Liouville
//! fractional elliptic problems on triangular meshes.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod fracint;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod special;
pub mod verify;

#[cfg(test)]
pub(crate) mod testing;

pub use error::{Error, Result};

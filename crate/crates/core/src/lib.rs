//! Sampling theory on concrete locally compact groups.
//!
//! The crate discretizes ℝⁿ, the affine group of the line and the
//! Heisenberg group H¹ on quadrature grids and provides separated and
//! dense point sets, oscillation estimates, reproducing kernels, frame
//! operators with bound estimation, and iterative reconstruction.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod frames;
pub mod grid;
pub mod group;
pub mod kernels;
pub mod linalg;
pub mod pointsets;

pub use error::{Error, Result};
pub use grid::{Axis, Grid, GridFunction, Norms};
pub use group::{GroupModel, GroupPoint, ModelKind};
pub use num_complex::Complex64;

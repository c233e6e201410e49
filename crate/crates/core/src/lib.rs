//! Finite-element solvers for coupled local/nonlocal diffusion on partitioned
//! 1D domains.
//!
//! The local region carries a Laplacian with homogeneous Dirichlet data on the
//! outer boundary and a natural (Neumann) condition on the interface; the
//! nonlocal region carries an integral operator with a compactly supported
//! kernel. The two pieces interact volumetrically through the same kernel.
//!
//! The crate provides:
//! - [`geometry`]: partitions, validation of the structural hypotheses, and
//!   admissible meshes over the horizon-enlarged domain;
//! - [`kernel`]: interaction kernels and their region moments;
//! - [`assembly`]: stiffness, absorption, nonlocal and coupling matrices;
//! - [`linsolve`]: banded Cholesky factorizations;
//! - [`schwarz`]: the alternating and parallel Schwarz iterations, the
//!   monolithic reference solve and convergence diagnostics.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod linsolve;
pub mod quadrature;
pub mod schwarz;
pub mod sparse;

pub use error::{Error, Result};

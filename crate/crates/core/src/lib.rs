//! Nonlinear Dirichlet-Neumann domain decomposition for the diffusion
//! equation `-div((1 + alpha u^2) grad u) = f`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too; the banded
// solvers index several arrays in lockstep.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod acceptance;
pub mod dn;
pub mod error;
pub mod harness;
pub mod history;
pub mod kirchhoff;
pub mod linalg;
pub mod newton;
pub mod npc;
pub mod pde1d;
pub mod pde2d;
pub mod problem;
pub mod transmission;

pub use error::{Error, Result};

//! Spectral toolkit for the two-phase overdetermined problem
//! `-div(σ∇u) = 1` in `Ω`, `u = 0` and `∂_n u = -d/H` on `∂Ω`,
//! on star-shaped perturbations of concentric balls.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod continuation;
pub mod error;
pub mod geometry;
pub mod harmonics;
pub mod overdet;
pub mod radial;
pub mod solver;

pub use error::{Error, Result};

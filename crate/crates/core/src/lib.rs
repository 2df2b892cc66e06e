//! Differential analysis of the damped, driven pendulum and its relatives: prolonged flows,
//! Finsler-Lyapunov contraction, cone invariance, Perron-Frobenius vector fields and the
//! limit-cycle atlas in the `(k, u)` plane.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod contraction;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod model;
pub mod orbits;
pub mod positivity;

pub use error::{Error, Result};

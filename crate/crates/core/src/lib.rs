//! Numerical toolkit for the two-dimensional Lagrangian mean curvature
//! equation `arctan λ₁(D²u) + arctan λ₂(D²u) = θ + f(x)` on exterior domains.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod config;
pub mod error;
pub mod fields;
pub mod lewy;
pub mod nonlocal;
pub mod oracle;
pub mod phase;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};

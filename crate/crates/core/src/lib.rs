//! Fractional calculus of variations with Caputo derivatives: special
//! functions, fractional operators, Euler-Lagrange residuals and direct solvers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fracops;
pub mod problemdef;
pub mod quad;
pub mod solver;
pub mod specfun;
pub mod varcalc;

pub use error::{Error, Result};

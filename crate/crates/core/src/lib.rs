//! Minimizing-movement (discrete Morse flow) time stepping for the porous
//! medium equation on a rectangle and for Ricci flow on the football
//! `dr² + (α sin r)² dθ²`.
//!
//! Every time step minimizes a step functional (a kinetic term measuring the
//! distance to the previous state plus the driving energy). The per-step
//! minimizers are certified by their discrete Euler-Lagrange residual, and the
//! flow driver keeps an energy ledger that checks the decay estimate
//! `E(u_n) + kinetic_n <= E(u_{n-1})` at every step.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod acceptance;
pub mod config;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod geometry;
pub mod minimizer;
pub mod oracles;

pub use error::{Error, Result};

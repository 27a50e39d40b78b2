//! Solvers for Cauchy problems of Volterra integrodifferential equations
//! `du/dt + int_0^t k(t-s) A u(s) ds = phi(t)` whose difference kernel is
//! compressed to a sum of exponentials, turning the memory term into `m`
//! auxiliary local evolution equations.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod kernels;
pub mod schemes;

pub use error::{Error, Result};

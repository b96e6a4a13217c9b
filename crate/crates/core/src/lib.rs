//! Continuous projective measurement of mixed states.
//!
//! A state is evolved by `e^{-iΔH}` between measurement times and dephased
//! in a moving orthonormal basis at each time. As the time partition is
//! refined the posterior state approaches the state carried along the basis
//! curve. The crate computes the posterior state by two independent routes,
//! evaluates the explicit error bounds for that convergence, and checks the
//! entropy convergence conditions.

pub mod bounds;
pub mod channels;
pub mod cli;
pub mod curves;
pub mod error;
pub mod measurement;
pub mod numerics;
pub mod states;

pub use error::{Error, Result};

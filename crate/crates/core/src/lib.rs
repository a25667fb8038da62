//! Model-free online policy gradient for the Linear Quadratic Regulator.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`lqr`]: exact analytics for a known plant (Lyapunov and Riccati
//!   solvers, the infinite-horizon cost, its closed-form gradient and the
//!   regularity constants that drive the learner's schedule);
//! * [`smoothing`] and [`gd`]: generic zeroth-order machinery, i.e. sphere
//!   sampling, the one-point gradient estimator and gradient descent with a
//!   corrupted oracle;
//! * [`simulator`]: the stochastic plant, including truncated Gaussian noise;
//! * [`online`]: the epoch-structured learner and its regret trace.
//!
//! IO, experiments and the command line live in the companion `lqrpg` crate.
#![no_std]

extern crate alloc;

mod error;
pub mod gd;
pub mod linalg;
pub mod lqr;
pub mod online;
pub mod rng;
pub mod simulator;
pub mod smoothing;
#[cfg(test)]
mod test_support;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use lqr::{Controller, LqrSystem, NoiseKind, NoiseModel};

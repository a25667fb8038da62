//! Exact LQR analytics for a known plant.
//!
//! Everything here uses ground truth `(A, B, Q, R, Σ_w)`. The online learner
//! never calls into this module on its decision path; it is used for
//! diagnostics, baselines and validation.

mod analytics;
mod constants;
mod random;
mod system;

pub use analytics::{
    exact_policy_gradient, infinite_horizon_cost, solve_optimal, solve_p, solve_sigma,
    steady_state, GroundTruth, SolverOptions, SteadyStateSolution,
};
pub use constants::{regularity_constants, strong_stability, RegularityConstants, StrongStability};
pub use random::{random_admissible_controller, random_stable_system};
pub use system::{Controller, LqrSystem, NoiseKind, NoiseModel, Normalization};

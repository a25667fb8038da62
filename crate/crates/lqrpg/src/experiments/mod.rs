//! Reproduction experiments: regret scaling, exploration cost, gradient
//! fidelity and the corrupted gradient descent bound suite.
//!
//! Every experiment is a pure function of its configuration and a master
//! seed. Grid points run in parallel on a pool capped by `LQRPG_THREADS`,
//! and results are always collected in grid order.

mod exploration;
mod fidelity;
mod fit;
mod regret;
mod report;
mod zoo;

pub use exploration::{exploration_cost_scaling, geometric_grid, ExplorationConfig, ExplorationCost, ExplorationRow};
pub use fidelity::{
    gradient_fidelity, smoothing_bias, CostOracle, FLOOR_MARGIN, FidelityConfig, FidelityRow, GradientFidelity, GradientFn,
};
pub use fit::{fit_scaling, least_squares, FitPoint, ScalingFit};
pub use regret::{regret_scaling, RegretRun, RegretScaling, RegretSweep, MAX_DIVERGED_FRACTION};
pub use report::{emit_report, regret_curves_plot, Report};
pub use zoo::{corrupted_gd_bound_suite, zoo, GdCase, GdSuite, Objective, Pattern};

use lqrpg_core::Error as CoreError;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("scaling fit: {0}")]
    Fit(String),
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

pub type Result<T, E = ExperimentError> = std::result::Result<T, E>;

/// Kinds of sweep the command line can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    RegretScaling,
    ExplorationCost,
    CorruptedGdBound,
    GradientFidelity,
}

/// Worker count: `LQRPG_THREADS` if set and positive, else rayon's default.
pub fn worker_count() -> usize {
    std::env::var("LQRPG_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Maps `f` over `items` on the bounded pool, preserving order.
pub fn par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(worker_count()).build() {
        Ok(pool) => pool.install(|| items.into_par_iter().map(&f).collect()),
        Err(_) => items.into_iter().map(f).collect(),
    }
}

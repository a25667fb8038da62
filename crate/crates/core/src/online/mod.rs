//! The epoch-structured online policy gradient learner.
//!
//! A run is split into epochs. Epoch `j` has `m_j` sub-epochs of `τ` rounds
//! each; every sub-epoch plays `K_j + r_j·U` for a fresh uniform direction
//! `U` on the unit sphere and keeps only the cost of its last round. Those
//! costs feed a one-point gradient estimate and a single gradient step.
//!
//! The learner only sees a [`Plant`], i.e. something that takes a controller
//! and returns a scalar cost. Ground truth enters through [`Diagnostics`],
//! whose values are written to the trace and never read back.

mod learner;
mod schedule;
mod trace;

pub use learner::{play_fixed, run, run_on_system, Diagnostics, Plant};
pub use schedule::{epoch_plan, theorem1_schedule, PlannedEpoch, Schedule, ScheduleOverrides, TheoreticalSchedule};
pub use trace::{regret, EpochRecord, RegretTrace, RunStatus, Warning};

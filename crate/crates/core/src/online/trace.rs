use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused whenever std is linked in
use num_traits::Float;

use crate::linalg::Matrix;
use crate::lqr::Controller;

/// Non-fatal conditions noticed while setting up or running the learner.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// `J(K₀) > ν/4`: the initial controller is outside the assumed budget.
    InitialCostAboveBudget { cost: f64, budget: f64 },
    /// The exploration radius was allowed past the local radius `D₀`.
    RadiusExceedsD0 { r0: f64, d0: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// The run stopped early at round `step` while in epoch `epoch`.
    Diverged { epoch: usize, step: u64, reason: String },
}

/// What happened in epoch `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub j: usize,
    /// `K_j`, the controller the epoch explores around.
    pub controller: Controller,
    pub radius: f64,
    /// `m_j` from the schedule.
    pub planned_subepochs: u64,
    /// Rounds attributed to this epoch.
    pub steps: u64,
    /// Observed final-round costs of the completed sub-epochs.
    pub final_costs: Vec<f64>,
    /// `g_j`; `None` when no sub-epoch completed.
    pub gradient: Option<Matrix>,
    /// `J(K_j)` from ground truth. Diagnostic only.
    pub cost: f64,
    /// `∇J(K_j)` from ground truth. Diagnostic only.
    pub true_gradient: Option<Matrix>,
}

impl EpochRecord {
    /// Sub-epochs that finished and contributed a sample.
    pub fn completed_subepochs(&self) -> usize {
        self.final_costs.len()
    }

    /// Angle between `g_j` and `∇J(K_j)` in degrees.
    pub fn gradient_angle_deg(&self) -> Option<f64> {
        let (g, t) = (self.gradient.as_ref()?, self.true_gradient.as_ref()?);
        let denom = g.norm() * t.norm();
        if denom == 0.0 {
            return None;
        }
        let cos = (g.dot(t) / denom).clamp(-1.0, 1.0);
        Some(cos.acos().to_degrees())
    }
}

/// Full record of one online run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    /// `c_t` for every round played.
    pub costs: Vec<f64>,
    /// Epoch index of each round.
    pub epochs: Vec<u32>,
    /// Sub-epoch index of each round within its epoch.
    pub subepochs: Vec<u64>,
    pub j_star: f64,
    /// `Σ_{s≤t} (c_s − J★)`.
    pub regret_curve: Vec<f64>,
    pub epoch_records: Vec<EpochRecord>,
    /// Controller of the last epoch that completed its update.
    pub final_controller: Controller,
    pub status: RunStatus,
    pub warnings: Vec<Warning>,
}

impl RegretTrace {
    /// Trace of a run without epochs, e.g. a fixed controller baseline.
    pub fn from_costs(costs: Vec<f64>, j_star: f64, controller: Controller) -> Self {
        let n = costs.len();
        let mut trace = Self {
            costs: Vec::with_capacity(n),
            epochs: alloc::vec![0; n],
            subepochs: alloc::vec![0; n],
            j_star,
            regret_curve: Vec::with_capacity(n),
            epoch_records: Vec::new(),
            final_controller: controller,
            status: RunStatus::Completed,
            warnings: Vec::new(),
        };
        for c in costs {
            trace.push_cost(c);
        }
        trace
    }

    pub(crate) fn push_cost(&mut self, cost: f64) {
        let prev = self.regret_curve.last().copied().unwrap_or(0.0);
        self.costs.push(cost);
        self.regret_curve.push(prev + (cost - self.j_star));
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }

    /// `J(K_j)` after the last recorded epoch, or `None` for an empty run.
    pub fn last_epoch_cost(&self) -> Option<f64> {
        self.epoch_records.last().map(|e| e.cost)
    }
}

/// `Σ_t (c_t − J★)` over the whole trace.
pub fn regret(trace: &RegretTrace) -> f64 {
    trace.regret_curve.last().copied().unwrap_or(0.0)
}

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{invalid, mismatch, Error, Result};
use crate::linalg::Matrix;
use crate::lqr::{Controller, GroundTruth, LqrSystem};
use crate::rng::SeedStreams;
use crate::simulator::Simulation;
use crate::smoothing::{sample_sphere, OnePointAccumulator};

use super::schedule::{epoch_plan, Schedule};
use super::trace::{EpochRecord, RegretTrace, RunStatus, Warning};

/// The environment as the learner sees it: play a controller for one round,
/// get that round's cost back.
pub trait Plant {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn play(&mut self, k: &Controller) -> Result<f64>;
}

impl<R: RngCore> Plant for Simulation<R> {
    fn state_dim(&self) -> usize {
        self.system().state_dim()
    }

    fn input_dim(&self) -> usize {
        self.system().input_dim()
    }

    fn play(&mut self, k: &Controller) -> Result<f64> {
        self.advance(k)
    }
}

/// Ground-truth quantities written into the trace for analysis.
pub trait Diagnostics {
    fn j_star(&self) -> f64;
    /// `J(K)`, `+∞` when `K` does not stabilize the plant.
    fn cost(&self, k: &Controller) -> f64;
    fn gradient(&self, k: &Controller) -> Option<Matrix>;
}

impl Diagnostics for GroundTruth {
    fn j_star(&self) -> f64 {
        GroundTruth::j_star(self)
    }

    fn cost(&self, k: &Controller) -> f64 {
        GroundTruth::cost(self, k)
    }

    fn gradient(&self, k: &Controller) -> Option<Matrix> {
        GroundTruth::gradient(self, k)
    }
}

fn diverged(trace: &mut RegretTrace, epoch: usize, reason: impl ToString) {
    trace.status = RunStatus::Diverged { epoch, step: trace.costs.len() as u64, reason: reason.to_string() };
}

/// Runs the learner for `horizon` rounds starting from `k0`.
///
/// Exploration directions for sub-epoch `(j, i)` come from
/// `streams.direction(j, i)`; the plant owns its own noise. Divergence is
/// not an error: the run stops and the partial trace says why. An epoch cut
/// short by the horizon records its estimate but applies no update.
pub fn run<P: Plant, D: Diagnostics>(
    plant: &mut P,
    diagnostics: &D,
    k0: &Controller,
    schedule: &Schedule,
    horizon: u64,
    streams: &SeedStreams,
) -> Result<RegretTrace> {
    let (du, dx) = (plant.input_dim(), plant.state_dim());
    if k0.input_dim() != du || k0.state_dim() != dx {
        return Err(mismatch(format!("K0 must be {du}x{dx}")));
    }
    if schedule.theoretical_only() {
        return Err(invalid(format!(
            "first epoch needs {:.3e} rounds but the horizon is {horizon}; scale the schedule down",
            schedule.m0 * schedule.tau as f64
        )));
    }
    let j0 = diagnostics.cost(k0);
    if !j0.is_finite() {
        return Err(invalid("K0 does not stabilize the plant"));
    }

    let mut trace = RegretTrace::from_costs(Vec::new(), diagnostics.j_star(), k0.clone());
    if j0 > schedule.nu / 4.0 {
        trace.warnings.push(Warning::InitialCostAboveBudget { cost: j0, budget: schedule.nu / 4.0 });
    }
    if schedule.radius_exceeds_d0() {
        trace.warnings.push(Warning::RadiusExceedsD0 { r0: schedule.r0, d0: schedule.d0 });
    }

    let tau = schedule.tau;
    let mut k = k0.clone();
    let mut k_cost = j0;
    for epoch in epoch_plan(schedule, horizon) {
        let mut acc = OnePointAccumulator::new(du, dx);
        let mut final_costs = Vec::new();
        let mut remaining = epoch.steps;
        let mut i = 0u64;
        let mut failure = None;
        'subepochs: while remaining > 0 {
            let direction = sample_sphere(du, dx, &mut streams.direction(epoch.j as u64, i));
            let played = k.perturbed(epoch.radius, direction.as_matrix());
            let rounds = remaining.min(tau);
            let mut last = 0.0;
            for _ in 0..rounds {
                match plant.play(&played) {
                    Ok(c) => {
                        last = c;
                        trace.push_cost(c);
                        trace.epochs.push(epoch.j as u32);
                        trace.subepochs.push(i);
                    }
                    Err(e) => {
                        failure = Some(e);
                        break 'subepochs;
                    }
                }
            }
            // a cut sub-epoch never reached its final round
            if rounds == tau {
                acc.push(last, &direction);
                final_costs.push(last);
            }
            remaining -= rounds;
            i += 1;
        }

        let gradient = acc.estimate(epoch.radius);
        trace.epoch_records.push(EpochRecord {
            j: epoch.j,
            controller: k.clone(),
            radius: epoch.radius,
            planned_subepochs: epoch.subepochs,
            steps: epoch.steps - remaining,
            final_costs,
            gradient: gradient.clone(),
            cost: k_cost,
            true_gradient: diagnostics.gradient(&k),
        });
        if let Some(e) = failure {
            diverged(&mut trace, epoch.j, e);
            return Ok(trace);
        }
        // the horizon ends inside a cut epoch, so its estimate is only recorded
        if epoch.truncated(tau) {
            break;
        }
        if let Some(g) = gradient {
            k = Controller::new(k.gain() - g * schedule.eta).map_err(|_| Error::DivergenceDetected {
                step: trace.costs.len(),
                value: f64::INFINITY,
            })?;
            k_cost = diagnostics.cost(&k);
            if !k_cost.is_finite() {
                trace.final_controller = k;
                diverged(&mut trace, epoch.j + 1, "updated controller does not stabilize the plant");
                return Ok(trace);
            }
        }
    }
    trace.final_controller = k;
    Ok(trace)
}

/// Runs the learner on a simulated copy of `system` with noise from `streams.noise()`.
pub fn run_on_system(
    system: &LqrSystem,
    k0: &Controller,
    schedule: &Schedule,
    horizon: u64,
    streams: &SeedStreams,
) -> Result<RegretTrace> {
    system.check_controller(k0)?;
    let truth = GroundTruth::new(system.clone())?;
    let mut plant = Simulation::new(system.clone(), streams.noise());
    run(&mut plant, &truth, k0, schedule, horizon, streams)
}

/// Plays `k` for `horizon` rounds. Baseline for regret comparisons.
pub fn play_fixed<P: Plant>(plant: &mut P, k: &Controller, horizon: u64, j_star: f64) -> RegretTrace {
    let mut trace = RegretTrace::from_costs(Vec::new(), j_star, k.clone());
    for _ in 0..horizon {
        match plant.play(k) {
            Ok(c) => {
                trace.push_cost(c);
                trace.epochs.push(0);
                trace.subepochs.push(0);
            }
            Err(e) => {
                diverged(&mut trace, 0, e);
                break;
            }
        }
    }
    trace
}

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused whenever std is linked in
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::lqr::RegularityConstants;

/// Multipliers applied on top of the theoretical schedule.
///
/// With all multipliers at 1 the schedule is the faithful one, which is far
/// too conservative to run on a desktop. Integer parameters are rounded
/// after scaling and never drop below 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleOverrides {
    pub eta_mult: f64,
    pub r0_mult: f64,
    pub m0_mult: f64,
    pub tau_mult: f64,
    /// Skip the `r₀ ≤ D₀` clamp. Runs that use this get a warning in their trace.
    pub unclamped_radius: bool,
}

impl Default for ScheduleOverrides {
    fn default() -> Self {
        Self { eta_mult: 1.0, r0_mult: 1.0, m0_mult: 1.0, tau_mult: 1.0, unclamped_radius: false }
    }
}

impl ScheduleOverrides {
    /// Multipliers that turn `theory` into the given effective values.
    ///
    /// The multipliers are what gets stored, so the same overrides applied at
    /// another horizon follow the horizon dependence of `τ` and `m₀`.
    pub fn targeting(theory: &TheoreticalSchedule, eta: f64, r0: f64, m0: f64, tau: f64) -> Self {
        Self {
            eta_mult: eta / theory.eta,
            r0_mult: r0 / theory.r0,
            m0_mult: m0 / theory.m0,
            tau_mult: tau / theory.tau,
            unclamped_radius: false,
        }
    }

    pub fn unclamped(mut self) -> Self {
        self.unclamped_radius = true;
        self
    }
}

/// The parameters exactly as the regret theorem prescribes them.
///
/// `m0` and `tau` are kept as floats because `m₀` overflows any integer type for
/// realistic constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalSchedule {
    pub eta: f64,
    pub tau: f64,
    pub r0: f64,
    pub m0: f64,
}

/// Effective schedule of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub eta: f64,
    pub tau: u64,
    pub mu: f64,
    pub r0: f64,
    /// Integer valued, stored as `f64`.
    pub m0: f64,
    pub rho: f64,
    pub delta: f64,
    pub horizon: u64,
    pub nu: f64,
    pub d0: f64,
    pub overrides: ScheduleOverrides,
    pub theoretical: TheoreticalSchedule,
    /// Whether the clamp `r₀ ≤ D₀` changed `r₀`.
    pub radius_clamped: bool,
}

impl Schedule {
    /// `r_j = r₀·ρ^{j/2}`.
    pub fn radius(&self, j: usize) -> f64 {
        self.r0 * self.rho.powf(j as f64 / 2.0)
    }

    /// `m_j = ceil(m₀·ρ^{-2j})`, saturating.
    pub fn subepochs(&self, j: usize) -> u64 {
        let m = (self.m0 * self.rho.powf(-2.0 * j as f64)).ceil();
        if m >= u64::MAX as f64 {
            u64::MAX
        } else {
            m as u64
        }
    }

    /// True when not even the first epoch fits in the horizon.
    pub fn theoretical_only(&self) -> bool {
        self.m0 * self.tau as f64 > self.horizon as f64
    }

    /// `r₀ > D₀`; only possible with `unclamped_radius`.
    pub fn radius_exceeds_d0(&self) -> bool {
        self.r0 > self.d0
    }
}

/// Builds the schedule from the regularity constants, horizon `T`, confidence
/// `δ`, input dimension and noise bound `W`, then applies `overrides`.
pub fn theorem1_schedule(
    consts: &RegularityConstants,
    horizon: u64,
    delta: f64,
    input_dim: usize,
    bound_w: f64,
    overrides: ScheduleOverrides,
) -> Result<Schedule> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    if input_dim == 0 {
        return Err(invalid("input dimension must be positive"));
    }
    if !(bound_w >= 0.0) || !bound_w.is_finite() {
        return Err(invalid(format!("noise bound must be finite and non-negative, got {bound_w}")));
    }
    let o = overrides;
    for (name, v) in [("eta", o.eta_mult), ("r0", o.r0_mult), ("m0", o.m0_mult), ("tau", o.tau_mult)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(format!("{name} multiplier must be positive and finite, got {v}")));
        }
    }

    let RegularityConstants { nu, alpha0, psi, sigma_sq, kappa, .. } = *consts;
    let t = horizon as f64;
    let dx = consts.state_dim as f64;
    let du = input_dim as f64;
    let k10 = kappa.powi(10);

    let eta = alpha0 / (128.0 * nu * psi.powi(2) * k10);
    let tau = (2.0 * kappa.powi(2) * (7.0 * kappa * t).ln()).ceil();
    let mu = consts.pl;
    let r0 = alpha0 / (448.0 * dx.sqrt() * psi.powi(2) * k10);
    let sqrt_m0 = 2f64.powi(17) * du * dx.powf(1.5) * psi.powi(2) * kappa.powi(20) * bound_w.powi(2)
        / (alpha0 * sigma_sq)
        * (240.0 * t.powi(4) / delta).ln().sqrt();
    let theoretical = TheoreticalSchedule { eta, tau, r0, m0: sqrt_m0.powi(2) };

    let eta_eff = eta * o.eta_mult;
    // ρ rounds to exactly 1 when μη/3 is below half an ulp, as it does for
    // the faithful step size on poorly conditioned plants
    let rho = 1.0 - mu * eta_eff / 3.0;
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid(format!("step size {eta_eff} gives rho = {rho} outside (0, 1]")));
    }
    let mut r0_eff = r0 * o.r0_mult;
    let mut radius_clamped = false;
    if !o.unclamped_radius && r0_eff > consts.d0 {
        r0_eff = consts.d0;
        radius_clamped = true;
    }
    let tau_eff = (tau * o.tau_mult).round().max(1.0);
    Ok(Schedule {
        eta: eta_eff,
        tau: if tau_eff >= u64::MAX as f64 { u64::MAX } else { tau_eff as u64 },
        mu,
        r0: r0_eff,
        m0: (theoretical.m0 * o.m0_mult).round().max(1.0),
        rho,
        delta,
        horizon,
        nu,
        d0: consts.d0,
        overrides: o,
        theoretical,
        radius_clamped,
    })
}

/// One epoch of a plan. `steps` is `m_j·τ` except for the last epoch, which is
/// cut at the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedEpoch {
    pub j: usize,
    pub radius: f64,
    pub subepochs: u64,
    pub steps: u64,
}

impl PlannedEpoch {
    pub fn truncated(&self, tau: u64) -> bool {
        self.steps < self.subepochs.saturating_mul(tau)
    }
}

/// Epochs covering exactly `horizon` rounds: the shortest prefix whose
/// cumulative length reaches the horizon, with the last epoch cut to fit.
pub fn epoch_plan(schedule: &Schedule, horizon: u64) -> Vec<PlannedEpoch> {
    let mut plan = Vec::new();
    let mut used = 0u64;
    let mut j = 0;
    while used < horizon {
        let subepochs = schedule.subepochs(j);
        let full = subepochs.saturating_mul(schedule.tau);
        let steps = full.min(horizon - used);
        plan.push(PlannedEpoch { j, radius: schedule.radius(j), subepochs, steps });
        used += steps;
        j += 1;
    }
    plan
}

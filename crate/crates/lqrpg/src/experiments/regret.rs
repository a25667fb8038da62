use lqrpg_core::lqr::GroundTruth;
use lqrpg_core::online::{play_fixed, regret, run_on_system, ScheduleOverrides};
use lqrpg_core::rng::{derive_seed, SeedStreams};
use lqrpg_core::simulator::Simulation;
use lqrpg_core::Controller;

use super::fit::{fit_scaling, ScalingFit};
use super::{par_map, ExperimentError, Result};
use crate::config::SystemConfig;
use crate::plot::thin;

/// Sweeps with a larger share of diverged runs are considered miscalibrated.
pub const MAX_DIVERGED_FRACTION: f64 = 0.2;

const CURVE_POINTS: usize = 400;

#[derive(Debug, Clone)]
pub struct RegretSweep {
    pub config: SystemConfig,
    pub horizons: Vec<u64>,
    pub seeds: usize,
    pub master_seed: u64,
    pub overrides: ScheduleOverrides,
    /// Fixed controller played as a linear-regret reference.
    pub baseline: Option<Controller>,
}

/// Result of one `(T, seed)` grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretRun {
    pub horizon: u64,
    pub seed_index: usize,
    pub regret: f64,
    /// `J(K_last) − J★`; for the baseline, the constant gap.
    pub final_gap: f64,
    pub epochs: usize,
    pub diverged: bool,
    /// Thinned `(t, regret_t)` curve, kept for seed 0 only.
    pub curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretScaling {
    pub runs: Vec<RegretRun>,
    pub baseline_runs: Vec<RegretRun>,
    pub fit: Option<ScalingFit>,
    pub baseline_fit: Option<ScalingFit>,
}

impl RegretScaling {
    pub fn diverged(&self) -> usize {
        self.runs.iter().filter(|r| r.diverged).count()
    }

    pub fn within_divergence_budget(&self) -> bool {
        self.runs.is_empty() || (self.diverged() as f64) <= MAX_DIVERGED_FRACTION * self.runs.len() as f64
    }
}

fn streams(master: u64, horizon: u64, seed_index: usize) -> SeedStreams {
    SeedStreams::new(derive_seed(master, &[horizon, seed_index as u64]))
}

fn curve(points: &[f64], keep: bool) -> Vec<(f64, f64)> {
    if !keep {
        return Vec::new();
    }
    let pts: Vec<(f64, f64)> = points.iter().enumerate().map(|(t, r)| ((t + 1) as f64, *r)).collect();
    thin(&pts, CURVE_POINTS)
}

fn grouped(runs: &[RegretRun], horizons: &[u64]) -> Vec<(f64, Vec<f64>)> {
    horizons
        .iter()
        .map(|&h| (h as f64, runs.iter().filter(|r| r.horizon == h && !r.diverged).map(|r| r.regret).collect()))
        .filter(|(_, v): &(f64, Vec<f64>)| !v.is_empty())
        .collect()
}

/// Runs the learner (and optionally a fixed baseline) over the horizon grid.
///
/// Diverged runs are kept in `runs` but excluded from the fit.
pub fn regret_scaling(sweep: &RegretSweep) -> Result<RegretScaling> {
    if sweep.seeds == 0 {
        return Err(ExperimentError::Invalid("need at least one seed".into()));
    }
    let grid: Vec<(u64, usize)> =
        sweep.horizons.iter().flat_map(|&h| (0..sweep.seeds).map(move |s| (h, s))).collect();
    let truths = sweep
        .horizons
        .iter()
        .map(|&h| Ok((h, GroundTruth::new(sweep.config.system(h)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let truth_for = |h: u64| &truths.iter().find(|(t, _)| *t == h).expect("horizon in grid").1;

    let runs = par_map(grid.clone(), |(h, s)| -> Result<RegretRun> {
        let truth = truth_for(h);
        let schedule = sweep.config.schedule(truth.system(), h, sweep.overrides)?;
        let trace = run_on_system(truth.system(), &sweep.config.k0, &schedule, h, &streams(sweep.master_seed, h, s))?;
        Ok(RegretRun {
            horizon: h,
            seed_index: s,
            regret: regret(&trace),
            final_gap: truth.cost(&trace.final_controller) - truth.j_star(),
            epochs: trace.epoch_records.len(),
            diverged: trace.diverged(),
            curve: curve(&trace.regret_curve, s == 0),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let baseline_runs = match &sweep.baseline {
        None => Vec::new(),
        Some(k) => par_map(grid, |(h, s)| {
            let truth = truth_for(h);
            let mut plant = Simulation::new(truth.system().clone(), streams(sweep.master_seed, h, s).noise());
            let trace = play_fixed(&mut plant, k, h, truth.j_star());
            RegretRun {
                horizon: h,
                seed_index: s,
                regret: regret(&trace),
                final_gap: truth.cost(k) - truth.j_star(),
                epochs: 0,
                diverged: trace.diverged(),
                curve: curve(&trace.regret_curve, s == 0),
            }
        }),
    };

    let fit_of = |runs: &[RegretRun]| -> Option<ScalingFit> {
        let groups = grouped(runs, &sweep.horizons);
        fit_scaling(&groups, sweep.master_seed).ok()
    };
    Ok(RegretScaling {
        fit: fit_of(&runs),
        baseline_fit: fit_of(&baseline_runs),
        runs,
        baseline_runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::Benchmark;

    #[test]
    fn small_sweep_is_reproducible_and_ordered() {
        let config = Benchmark::Scalar.config();
        let sweep = RegretSweep {
            overrides: config.overrides().unwrap(),
            baseline: Some(config.k0.clone()),
            config,
            horizons: vec![4000, 8000],
            seeds: 2,
            master_seed: 3,
        };
        let a = regret_scaling(&sweep).unwrap();
        let b = regret_scaling(&sweep).unwrap();
        assert_eq!(a, b);
        let order: Vec<(u64, usize)> = a.runs.iter().map(|r| (r.horizon, r.seed_index)).collect();
        assert_eq!(order, vec![(4000, 0), (4000, 1), (8000, 0), (8000, 1)]);
        assert!(a.runs[0].curve.len() > 1 && a.runs[1].curve.is_empty());
        assert!(a.within_divergence_budget());
        assert!(a.baseline_fit.is_some());
    }
}

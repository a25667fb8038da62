use lqrpg_core::lqr::{infinite_horizon_cost, LqrSystem};
use lqrpg_core::rng::{derive_seed, SeedStreams};
use lqrpg_core::simulator::Simulation;
use lqrpg_core::smoothing::{sample_sphere, OnePointAccumulator};
use lqrpg_core::{Controller, Matrix};

use super::fit::{fit_scaling, FitPoint, ScalingFit};
use super::{par_map, ExperimentError, Result};

/// Grid points whose mean error is below this multiple of the bias floor are left out of the decay fit.
pub const FLOOR_MARGIN: f64 = 3.0;

/// Reference gradient. Swappable so that the suites can be checked against a broken one.
pub type GradientFn = fn(&LqrSystem, &Controller) -> lqrpg_core::Result<Matrix>;

/// Where the cost samples come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostOracle {
    /// `J(K + rU)` exactly; the long-mixing limit of the online estimator.
    Exact,
    /// The cost of the last of `tau` rounds, state carried across samples.
    Simulated { tau: u64 },
}

#[derive(Debug, Clone)]
pub struct FidelityConfig {
    pub system: LqrSystem,
    pub controller: Controller,
    pub radius: f64,
    pub m_grid: Vec<usize>,
    pub repetitions: usize,
    pub oracle: CostOracle,
    pub seed: u64,
    pub gradient: GradientFn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityRow {
    pub m: usize,
    /// `‖g − ∇J(K)‖_F` over repetitions.
    pub error: FitPoint,
    /// Mean angle between `g` and the reference gradient, in degrees.
    pub angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientFidelity {
    pub rows: Vec<FidelityRow>,
    /// Power law of the mean error in `m`, fitted on the points still above the floor.
    pub decay: ScalingFit,
    /// How many grid points entered the fit.
    pub fitted_points: usize,
    /// `‖∇J_r(K) − ∇J(K)‖_F`, estimated with low-variance antithetic pairs.
    pub bias_floor: f64,
}

fn estimate(cfg: &FidelityConfig, m: usize, rep: usize) -> Result<Matrix> {
    let (du, dx) = (cfg.system.input_dim(), cfg.system.state_dim());
    let streams = SeedStreams::new(derive_seed(cfg.seed, &[m as u64, rep as u64]));
    let mut acc = OnePointAccumulator::new(du, dx);
    let mut sim = match cfg.oracle {
        CostOracle::Simulated { .. } => Some(Simulation::new(cfg.system.clone(), streams.noise())),
        CostOracle::Exact => None,
    };
    for i in 0..m {
        let u = sample_sphere(du, dx, &mut streams.direction(0, i as u64));
        let k = cfg.controller.perturbed(cfg.radius, u.as_matrix());
        let c = match (&mut sim, cfg.oracle) {
            (Some(sim), CostOracle::Simulated { tau }) => {
                let mut last = 0.0;
                for _ in 0..tau.max(1) {
                    last = sim.advance(&k)?;
                }
                last
            }
            _ => infinite_horizon_cost(&cfg.system, &k),
        };
        if !c.is_finite() {
            return Err(ExperimentError::Invalid(format!("radius {} leaves the stable set", cfg.radius)));
        }
        acc.push(c, &u);
    }
    Ok(acc.estimate(cfg.radius).expect("m > 0"))
}

fn angle_deg(a: &Matrix, b: &Matrix) -> f64 {
    let d = a.norm() * b.norm();
    if d == 0.0 {
        return 90.0;
    }
    (a.dot(b) / d).clamp(-1.0, 1.0).acos().to_degrees()
}

/// `‖E[(d/2r)(J(K+rU) − J(K−rU))U] − ∇J(K)‖_F` from `pairs` antithetic pairs.
pub fn smoothing_bias(
    system: &LqrSystem,
    controller: &Controller,
    radius: f64,
    pairs: usize,
    seed: u64,
    gradient: GradientFn,
) -> Result<f64> {
    let (du, dx) = (system.input_dim(), system.state_dim());
    let streams = SeedStreams::new(derive_seed(seed, &[u64::MAX]));
    let mut sum = Matrix::zeros(du, dx);
    for i in 0..pairs {
        let u = sample_sphere(du, dx, &mut streams.direction(0, i as u64));
        let plus = infinite_horizon_cost(system, &controller.perturbed(radius, u.as_matrix()));
        let minus = infinite_horizon_cost(system, &controller.perturbed(-radius, u.as_matrix()));
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(ExperimentError::Invalid(format!("radius {radius} leaves the stable set")));
        }
        sum += u.as_matrix() * ((plus - minus) / 2.0);
    }
    let smoothed = sum * ((du * dx) as f64 / (radius * pairs as f64));
    Ok((smoothed - gradient(system, controller)?).norm())
}

/// Error of the one-point estimate against the reference gradient for each `m`.
pub fn gradient_fidelity(cfg: &FidelityConfig) -> Result<GradientFidelity> {
    if cfg.repetitions == 0 || cfg.m_grid.iter().any(|m| *m == 0) || !(cfg.radius > 0.0) {
        return Err(ExperimentError::Invalid("need positive m, radius and repetitions".into()));
    }
    let truth = (cfg.gradient)(&cfg.system, &cfg.controller)?;
    let grid: Vec<(usize, usize)> =
        cfg.m_grid.iter().flat_map(|&m| (0..cfg.repetitions).map(move |rep| (m, rep))).collect();
    let estimates = par_map(grid, |(m, rep)| estimate(cfg, m, rep)).into_iter().collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for (i, &m) in cfg.m_grid.iter().enumerate() {
        let chunk = &estimates[i * cfg.repetitions..(i + 1) * cfg.repetitions];
        let errors: Vec<f64> = chunk.iter().map(|g| (g - &truth).norm()).collect();
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let var = if errors.len() > 1 { errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        rows.push(FidelityRow {
            m,
            error: FitPoint { x: m as f64, mean, std_err: (var / n).sqrt(), samples: errors.len() },
            angle_deg: chunk.iter().map(|g| angle_deg(g, &truth)).sum::<f64>() / n,
        });
        groups.push((m as f64, errors));
    }
    let bias_floor = smoothing_bias(&cfg.system, &cfg.controller, cfg.radius, 2000, cfg.seed, cfg.gradient)?;
    // Once the error is within a few multiples of the bias it stops decaying.
    let above: Vec<(f64, Vec<f64>)> = groups
        .iter()
        .zip(&rows)
        .filter(|(_, r)| r.error.mean > FLOOR_MARGIN * bias_floor)
        .map(|(g, _)| g.clone())
        .collect();
    let fitted = if above.len() >= 3 { above } else { groups };
    Ok(GradientFidelity { decay: fit_scaling(&fitted, cfg.seed)?, fitted_points: fitted.len(), bias_floor, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::Benchmark;
    use lqrpg_core::lqr::exact_policy_gradient;

    fn scalar() -> (LqrSystem, Controller) {
        let cfg = Benchmark::Scalar.config();
        (cfg.system(10_000).unwrap(), cfg.k0)
    }

    #[test]
    fn bias_shrinks_with_the_radius() {
        let (sys, k) = scalar();
        let b1 = smoothing_bias(&sys, &k, 0.2, 100, 1, exact_policy_gradient).unwrap();
        let b2 = smoothing_bias(&sys, &k, 0.1, 100, 1, exact_policy_gradient).unwrap();
        assert!(b2 <= b1 && b1 > 0.0);
    }

    #[test]
    fn error_decays_with_samples() {
        let (system, controller) = scalar();
        let cfg = FidelityConfig {
            system,
            controller,
            radius: 0.1,
            m_grid: vec![100, 1000, 10_000],
            repetitions: 10,
            oracle: CostOracle::Exact,
            seed: 4,
            gradient: exact_policy_gradient,
        };
        let out = gradient_fidelity(&cfg).unwrap();
        assert!(out.decay.slope < -0.3, "{}", out.decay.slope);
        assert!(out.rows[2].angle_deg < 10.0);
    }

    #[test]
    fn simulated_oracle_runs() {
        let (system, controller) = scalar();
        let cfg = FidelityConfig {
            system,
            controller,
            radius: 0.2,
            m_grid: vec![50, 200],
            repetitions: 3,
            oracle: CostOracle::Simulated { tau: 5 },
            seed: 4,
            gradient: exact_policy_gradient,
        };
        let out = gradient_fidelity(&cfg).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert!(out.rows.iter().all(|r| r.error.mean.is_finite()));
    }
}

use lqrpg_core::lqr::{infinite_horizon_cost, LqrSystem};
use lqrpg_core::rng::{derive_seed, SeedStreams};
use lqrpg_core::simulator::Simulation;
use lqrpg_core::smoothing::sample_sphere;
use lqrpg_core::Controller;

use super::fit::{fit_scaling, FitPoint, ScalingFit};
use super::{par_map, ExperimentError, Result};

#[derive(Debug, Clone)]
pub struct ExplorationConfig {
    pub system: LqrSystem,
    pub controller: Controller,
    pub radii: Vec<f64>,
    /// Antithetic pairs `(U, −U)` per radius, i.e. `m/2`.
    pub pairs: usize,
    /// Rounds per sub-epoch in the indirect measurement; `0` skips it.
    pub tau: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationRow {
    pub radius: f64,
    /// Mean of `J(K + rU) − J(K)`.
    pub direct: FitPoint,
    /// Mean over sub-epochs of `Σ_s (c_s − J(K_i))`.
    pub indirect: Option<FitPoint>,
    /// Perturbations that left the stable set.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationCost {
    pub rows: Vec<ExplorationRow>,
    pub direct_fit: ScalingFit,
    /// `None` when some indirect mean is not positive.
    pub indirect_fit: Option<ScalingFit>,
}

/// `n` points from `lo` to `hi`, evenly spaced in log scale.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect(),
    }
}

struct Samples {
    direct: Vec<f64>,
    indirect: Vec<f64>,
    excluded: usize,
}

fn measure(cfg: &ExplorationConfig, index: usize, r: f64) -> Samples {
    let (du, dx) = (cfg.system.input_dim(), cfg.system.state_dim());
    let streams = SeedStreams::new(derive_seed(cfg.seed, &[index as u64]));
    let base = infinite_horizon_cost(&cfg.system, &cfg.controller);
    let mut out = Samples { direct: Vec::with_capacity(2 * cfg.pairs), indirect: Vec::new(), excluded: 0 };
    let mut played = Vec::with_capacity(2 * cfg.pairs);
    for i in 0..cfg.pairs {
        let u = sample_sphere(du, dx, &mut streams.direction(0, i as u64));
        for dir in [u.as_matrix().clone(), u.negated().into_matrix()] {
            let k = cfg.controller.perturbed(r, &dir);
            let j = infinite_horizon_cost(&cfg.system, &k);
            if j.is_finite() {
                out.direct.push(j - base);
                played.push((k, j));
            } else {
                out.excluded += 1;
            }
        }
    }
    if cfg.tau > 0 {
        let mut sim = Simulation::new(cfg.system.clone(), streams.noise());
        for (k, j) in &played {
            let mut gap = 0.0;
            for _ in 0..cfg.tau {
                match sim.advance(k) {
                    Ok(c) => gap += c - j,
                    Err(_) => return out,
                }
            }
            out.indirect.push(gap);
        }
    }
    out
}

fn point(r: f64, v: &[f64]) -> FitPoint {
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    FitPoint { x: r, mean, std_err: (var / n as f64).sqrt(), samples: n }
}

/// Measures the cost of exploring at each radius and fits exponents in `r`.
///
/// The direct cost uses exact `J`; each direction is paired with its
/// negation, so first-order terms cancel in every pair.
pub fn exploration_cost_scaling(cfg: &ExplorationConfig) -> Result<ExplorationCost> {
    if cfg.pairs == 0 || cfg.radii.iter().any(|r| !(*r > 0.0)) {
        return Err(ExperimentError::Invalid("need positive radii and at least one pair".into()));
    }
    if !infinite_horizon_cost(&cfg.system, &cfg.controller).is_finite() {
        return Err(ExperimentError::Invalid("controller does not stabilize the plant".into()));
    }
    let indexed: Vec<(usize, f64)> = cfg.radii.iter().copied().enumerate().collect();
    let samples = par_map(indexed, |(i, r)| (r, measure(cfg, i, r)));
    let rows: Vec<ExplorationRow> = samples
        .iter()
        .map(|(r, s)| ExplorationRow {
            radius: *r,
            direct: point(*r, &s.direct),
            indirect: (!s.indirect.is_empty()).then(|| point(*r, &s.indirect)),
            excluded: s.excluded,
        })
        .collect();
    let direct_groups: Vec<(f64, Vec<f64>)> = samples.iter().map(|(r, s)| (*r, s.direct.clone())).collect();
    let indirect_groups: Vec<(f64, Vec<f64>)> =
        samples.iter().filter(|(_, s)| !s.indirect.is_empty()).map(|(r, s)| (*r, s.indirect.clone())).collect();
    Ok(ExplorationCost {
        direct_fit: fit_scaling(&direct_groups, cfg.seed)?,
        indirect_fit: fit_scaling(&indirect_groups, cfg.seed).ok(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::Benchmark;

    fn scalar(radii: Vec<f64>) -> ExplorationConfig {
        let cfg = Benchmark::Scalar.config();
        ExplorationConfig { system: cfg.system(10_000).unwrap(), controller: cfg.k0, radii, pairs: 50, tau: 0, seed: 1 }
    }

    #[test]
    fn grid_endpoints() {
        let g = geometric_grid(0.01, 0.3, 6);
        assert_eq!(g.len(), 6);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[5] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn antithetic_pairs_cancel_the_linear_term() {
        // scalar directions are ±1, so every pair gives J(k+r) + J(k−r) − 2J(k) exactly
        let cfg = scalar(vec![0.05]);
        let s = measure(&cfg, 0, 0.05);
        let j = |k: f64| infinite_horizon_cost(&cfg.system, &Controller::new(lqrpg_core::Matrix::from_element(1, 1, k)).unwrap());
        let expected = (j(0.05) + j(-0.05) - 2.0 * j(0.0)) / 2.0;
        let mean = s.direct.iter().sum::<f64>() / s.direct.len() as f64;
        assert!((mean - expected).abs() < 1e-12);
    }

    #[test]
    fn cost_vanishes_with_the_radius() {
        let out = exploration_cost_scaling(&scalar(geometric_grid(1e-4, 1e-1, 4))).unwrap();
        assert!(out.rows[0].direct.mean < 1e-6);
        assert!(out.rows.windows(2).all(|w| w[0].direct.mean < w[1].direct.mean));
    }
}

//! Invariant suites behind `lqrpg validate`.
//!
//! Each suite runs a fixed, seeded battery of checks and reports how many
//! failed. Nothing here reads the clock, so the report is a pure function of
//! the options.

use std::path::Path;

use lqrpg_core::linalg::{self, spectral_norm};
use lqrpg_core::lqr::{
    exact_policy_gradient, infinite_horizon_cost, random_admissible_controller, random_stable_system, solve_optimal,
    steady_state, RegularityConstants, SolverOptions,
};
use lqrpg_core::rng::{derive_seed, uniform, SeedStreams};
use lqrpg_core::simulator::{covariance_recursion, draw_noise, truncation_params};
use lqrpg_core::smoothing::{sample_sphere, OnePointAccumulator};
use lqrpg_core::{Controller, LqrSystem, Matrix};
use nalgebra::DVector;
use rand_core::RngCore;

use crate::benchmarks::Benchmark;
use crate::experiments::{
    corrupted_gd_bound_suite, exploration_cost_scaling, fit_scaling, geometric_grid, gradient_fidelity, CostOracle,
    ExperimentError, ExplorationConfig, FidelityConfig, GradientFn, Result,
};
use crate::export;

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const FD_TOL: f64 = 1e-4;
pub const STATIONARITY_TOL: f64 = 1e-8;
/// Window for the `m`-decay exponent of the one-point estimator error.
pub const DECAY_WINDOW: (f64, f64) = (-0.6, -0.4);
/// Window for the exploration cost exponent in `r`.
pub const EXPLORATION_WINDOW: (f64, f64) = (1.7, 2.3);

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub quick: bool,
    pub seed: u64,
    /// Reference gradient used by the fidelity suite.
    pub gradient: GradientFn,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { quick: false, seed: 0, gradient: exact_policy_gradient }
    }
}

impl ValidateOptions {
    fn systems(&self) -> usize {
        if self.quick {
            10
        } else {
            50
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: usize,
    pub failures: usize,
    /// First failures and headline numbers.
    pub detail: String,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checks > 0
    }
}

#[derive(Default)]
struct Tally {
    checks: usize,
    failures: usize,
    notes: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.failures <= 3 {
                self.notes.push(what());
            }
        }
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    fn finish(self, name: &'static str) -> SuiteResult {
        SuiteResult { name, checks: self.checks, failures: self.failures, detail: self.notes.join("; ") }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub suites: Vec<SuiteResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn rows(&self) -> Vec<Vec<String>> {
        self.suites
            .iter()
            .map(|s| {
                vec![
                    s.name.to_string(),
                    s.checks.to_string(),
                    s.failures.to_string(),
                    s.passed().to_string(),
                    s.detail.clone(),
                ]
            })
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> export::CsvResult {
        let file = std::fs::File::create(path)?;
        export::write_table(&["suite", "checks", "failures", "passed", "detail"], &self.rows(), file)
    }
}

/// Random plants with `d_x, d_u ∈ 1..=4` and `ρ(A) ∈ [0.5, 0.95)`.
pub fn random_systems(count: usize, seed: u64) -> Vec<(LqrSystem, Controller)> {
    let streams = SeedStreams::new(derive_seed(seed, &[0x5e5]));
    (0..count as u64)
        .map(|i| {
            let mut rng = streams.aux(i);
            let dx = 1 + (rng.next_u32() % 4) as usize;
            let du = 1 + (rng.next_u32() % 4) as usize;
            let rho = 0.5 + 0.45 * uniform(&mut rng);
            random_stable_system(dx, du, rho, &mut rng)
        })
        .collect()
}

fn unit(rows: usize, cols: usize, r: usize, c: usize) -> Matrix {
    let mut e = Matrix::zeros(rows, cols);
    e[(r, c)] = 1.0;
    e
}

/// Central differences of `J` at `k`, entry by entry.
pub fn finite_difference_gradient(sys: &LqrSystem, k: &Controller, h: f64) -> Matrix {
    let (du, dx) = (sys.input_dim(), sys.state_dim());
    Matrix::from_fn(du, dx, |r, c| {
        let e = unit(du, dx, r, c);
        (infinite_horizon_cost(sys, &k.perturbed(h, &e)) - infinite_horizon_cost(sys, &k.perturbed(-h, &e))) / (2.0 * h)
    })
}

fn relative(a: f64, scale: f64) -> f64 {
    a / scale.abs().max(1e-300)
}

/// Lyapunov and Bellman residuals and the two expressions for `J(K)`.
pub fn lyapunov_suite(opts: &ValidateOptions) -> Result<SuiteResult> {
    let mut t = Tally::default();
    let mut worst = 0.0f64;
    for (i, (sys, k)) in random_systems(opts.systems(), opts.seed).iter().enumerate() {
        let ss = steady_state(sys, k, SolverOptions::default())?;
        let m = sys.closed_loop(k);
        let stage = sys.q() + k.gain().transpose() * sys.r() * k.gain();
        let p_res = relative((&ss.p - (&stage + m.transpose() * &ss.p * &m)).norm(), ss.p.norm());
        let s_res = relative(
            (&ss.sigma - (sys.noise().covariance() + &m * &ss.sigma * m.transpose())).norm(),
            ss.sigma.norm(),
        );
        let dual = relative(
            (linalg::trace_product(&ss.p, sys.noise().covariance()) - linalg::trace_product(&stage, &ss.sigma)).abs(),
            ss.cost,
        );
        worst = worst.max(p_res).max(s_res).max(dual);
        t.check(p_res <= RESIDUAL_TOL, || format!("system {i}: Bellman residual {p_res:.3e}"));
        t.check(s_res <= RESIDUAL_TOL, || format!("system {i}: covariance residual {s_res:.3e}"));
        t.check(dual <= RESIDUAL_TOL, || format!("system {i}: dual cost gap {dual:.3e}"));
    }
    t.note(format!("worst relative residual {worst:.3e}"));
    Ok(t.finish("lyapunov_residuals"))
}

/// Stationarity and local minimality of `K★`, plus the hand-solved scalar benchmark.
pub fn optimality_suite(opts: &ValidateOptions) -> Result<SuiteResult> {
    let mut t = Tally::default();
    let perturbations = if opts.quick { 20 } else { 100 };
    for (i, (sys, _)) in random_systems(opts.systems(), opts.seed).iter().enumerate() {
        let (k_star, j_star) = solve_optimal(sys, SolverOptions::default())?;
        let g = exact_policy_gradient(sys, &k_star)?.norm();
        t.check(g <= STATIONARITY_TOL, || format!("system {i}: gradient norm {g:.3e} at the optimum"));
        let mut rng = SeedStreams::new(derive_seed(opts.seed, &[1, i as u64])).aux(0);
        let mut lower = 0;
        for _ in 0..perturbations {
            let d = sample_sphere(sys.input_dim(), sys.state_dim(), &mut rng);
            if infinite_horizon_cost(sys, &k_star.perturbed(0.01, d.as_matrix())) < j_star {
                lower += 1;
            }
        }
        t.check(lower == 0, || format!("system {i}: {lower} perturbations beat the optimum"));
    }
    let sys = Benchmark::Scalar.config().system(1000)?;
    let (k, j) = solve_optimal(&sys, SolverOptions::default())?;
    // p² − p/4 − 1 = 0
    let p = (0.25 + 4.0625f64.sqrt()) / 2.0;
    let k_hand = -0.5 * p / (1.0 + p);
    t.check((j - p).abs() <= 1e-5 && (k.gain()[(0, 0)] - k_hand).abs() <= 1e-5, || {
        format!("scalar benchmark: J* {j} K* {}", k.gain()[(0, 0)])
    });
    t.note(format!("scalar J*={j:.6} K*={:.6}", k.gain()[(0, 0)]));
    Ok(t.finish("optimality"))
}

/// The reference gradient against finite differences, and the one-point
/// estimator's error decay against the reference gradient.
pub fn gradient_fidelity_suite(opts: &ValidateOptions) -> Result<SuiteResult> {
    let mut t = Tally::default();
    let mut worst = 0.0f64;
    for (i, (sys, k)) in random_systems(opts.systems(), opts.seed).iter().enumerate() {
        let g = (opts.gradient)(sys, k)?;
        let fd = finite_difference_gradient(sys, k, 1e-5);
        let rel = relative((&g - &fd).norm(), fd.norm());
        worst = worst.max(rel);
        t.check(rel <= FD_TOL, || format!("system {i}: finite difference error {rel:.3e}"));
    }
    t.note(format!("worst finite difference error {worst:.3e}"));

    let cfg = Benchmark::Scalar.config();
    let system = cfg.system(cfg.default_horizon())?;
    let m_grid = if opts.quick { vec![100, 1000, 10_000] } else { vec![100, 1000, 10_000, 100_000] };
    let radius = 0.01;
    let fid = gradient_fidelity(&FidelityConfig {
        system: system.clone(),
        controller: cfg.k0.clone(),
        radius,
        m_grid,
        repetitions: if opts.quick { 40 } else { 20 },
        oracle: CostOracle::Exact,
        seed: derive_seed(opts.seed, &[2]),
        gradient: opts.gradient,
    })?;
    let slope = fid.decay.slope;
    t.check(slope >= DECAY_WINDOW.0 && slope <= DECAY_WINDOW.1, || {
        format!("one-point error decay exponent {slope:.3} outside [{}, {}]", DECAY_WINDOW.0, DECAY_WINDOW.1)
    });
    let beta = RegularityConstants::for_system(&system, &cfg.k0)?.smoothness;
    t.check(fid.bias_floor <= beta * radius, || format!("bias floor {:.3e} above beta*r", fid.bias_floor));
    t.note(format!("decay exponent {slope:.3} over {} points, bias floor {:.3e}", fid.fitted_points, fid.bias_floor));
    Ok(t.finish("gradient_fidelity"))
}

/// `f(x) = ½(x−c)ᵀH(x−c) + 1` with `H = diag(1, 2, 3)`, evaluated exactly.
fn quadratic(x: &[f64]) -> f64 {
    let c = [0.3, -0.2, 0.1];
    1.0 + x.iter().zip(c).enumerate().map(|(i, (xi, ci))| 0.5 * (i + 1) as f64 * (xi - ci).powi(2)).sum::<f64>()
}

/// One-point estimate of `∇quadratic(0)` from `m` samples.
pub fn quadratic_one_point_error(m: usize, radius: f64, seed: u64) -> f64 {
    let mut rng = SeedStreams::new(seed).aux(0);
    let mut acc = OnePointAccumulator::new(3, 1);
    let mut point = [0.0; 3];
    for _ in 0..m {
        let u = sample_sphere(3, 1, &mut rng);
        for (p, ui) in point.iter_mut().zip(u.as_matrix().iter()) {
            *p = radius * ui;
        }
        acc.push(quadratic(&point), &u);
    }
    let g = acc.estimate(radius).expect("m > 0");
    let truth = Matrix::from_column_slice(3, 1, &[-0.3, 0.4, -0.3]);
    (g - truth).norm()
}

/// The estimator on an exactly evaluated quadratic, where smoothing adds no bias.
pub fn one_point_suite(opts: &ValidateOptions) -> Result<SuiteResult> {
    let mut t = Tally::default();
    let radius = 0.5;
    let big = if opts.quick { 100_000 } else { 1_000_000 };
    let err = quadratic_one_point_error(big, radius, derive_seed(opts.seed, &[3]));
    t.check(err <= 0.05, || format!("m={big}: error {err:.4}"));
    let reps = if opts.quick { 10 } else { 20 };
    let grid: Vec<(f64, Vec<f64>)> = [100usize, 1000, 10_000, 100_000]
        .iter()
        .map(|&m| {
            let errs = (0..reps).map(|r| quadratic_one_point_error(m, radius, derive_seed(opts.seed, &[4, m as u64, r]))).collect();
            (m as f64, errs)
        })
        .collect();
    let fit = fit_scaling(&grid, opts.seed)?;
    t.check(fit.slope >= DECAY_WINDOW.0 && fit.slope <= DECAY_WINDOW.1, || format!("decay exponent {:.3}", fit.slope));
    t.note(format!("m={big} error {err:.4}, decay exponent {:.3}", fit.slope));
    Ok(t.finish("one_point_quadratic"))
}

/// Corrupted gradient descent bound over the objective zoo.
pub fn corrupted_gd_suite(opts: &ValidateOptions) -> Result<SuiteResult> {
    let steps = if opts.quick { 2000 } else { 10_000 };
    let suite = corrupted_gd_bound_suite(steps, derive_seed(opts.seed, &[5]))?;
    let mut t = Tally::default();
    for c in &suite.cases {
        t.check(c.passed(), || format!("{} / {}: violations at {:?}", c.objective, c.pattern.name(), &c.violations[..c.violations.len().min(3)]));
    }
    t.note(format!("{} cases of {steps} steps, {} out of contract", suite.cases.len(), suite.cases.iter().filter(|c| !c.in_contract).count()));
    Ok(t.finish("corrupted_gd_zoo"))
}

/// Direct exploration cost exponent in `r` around `K★` on each benchmark.
pub fn exploration_suite(opts: &ValidateOptions) -> Result<SuiteResult> {
    let mut t = Tally::default();
    let mut slopes = Vec::new();
    for b in Benchmark::ALL {
        let cfg = b.config();
        let system = cfg.system(cfg.default_horizon())?;
        let (k_star, _) = solve_optimal(&system, SolverOptions::default())?;
        let out = exploration_cost_scaling(&ExplorationConfig {
            system,
            controller: k_star,
            radii: geometric_grid(0.01, 0.3, 6),
            pairs: if opts.quick { 100 } else { 500 },
            tau: 0,
            seed: derive_seed(opts.seed, &[6, b as u64]),
        })?;
        let s = out.direct_fit.slope;
        t.check(s >= EXPLORATION_WINDOW.0 && s <= EXPLORATION_WINDOW.1, || format!("{}: exponent {s:.3}", b.name()));
        slopes.push(format!("{} {s:.3}", b.name()));
    }
    t.note(format!("exponents {}", slopes.join(", ")));
    Ok(t.finish("exploration_exponent"))
}

/// Covariance mixing against the `κ²e^{−2γt}` envelope.
pub fn mixing_suite(opts: &ValidateOptions) -> Result<SuiteResult> {
    let mut t = Tally::default();
    let streams = SeedStreams::new(derive_seed(opts.seed, &[7]));
    for i in 0..20u64 {
        let mut rng = streams.aux(i);
        let (sys, k0) = random_stable_system(3, 2, 0.9, &mut rng);
        let c = RegularityConstants::for_system(&sys, &k0)?;
        let k = random_admissible_controller(&sys, &k0, c.nu, &mut rng);
        let sigma = steady_state(&sys, &k, SolverOptions::default())?.sigma;
        let x0 = DVector::from_fn(3, |j, _| 3.0 - j as f64);
        let gap0 = spectral_norm(&(&x0 * x0.transpose() - &sigma));
        let mut bad = None;
        for (step, s) in covariance_recursion(&sys, &k, &x0, 200).iter().enumerate() {
            let err = spectral_norm(&(s - &sigma));
            let env = c.kappa.powi(2) * (-2.0 * c.gamma * step as f64).exp() * gap0;
            if err > env * (1.0 + 1e-9) + 1e-12 && bad.is_none() {
                bad = Some(step);
            }
        }
        t.check(bad.is_none(), || format!("controller {i}: envelope broken at t={}", bad.unwrap_or(0)));
    }
    Ok(t.finish("mixing_envelope"))
}

/// Truncation constants and moments of the truncated Gaussian sampler.
pub fn truncation_suite(opts: &ValidateOptions) -> Result<SuiteResult> {
    let mut t = Tally::default();
    let p = truncation_params(&Matrix::identity(2, 2), 1000, 0.01)?;
    t.check((p.w_bound - 10.7298).abs() <= 1e-4, || format!("W = {}", p.w_bound));
    t.check((p.sigma_sq_eff - 0.994523).abs() <= 1e-4, || format!("sigma_eff^2 = {}", p.sigma_sq_eff));
    let model = p.noise_model(Matrix::identity(2, 2))?;
    let draws = 1_000_000;
    let mut rng = SeedStreams::new(derive_seed(opts.seed, &[8])).noise();
    let mut mean = DVector::zeros(2);
    let mut second = Matrix::zeros(2, 2);
    let mut outside = 0usize;
    for _ in 0..draws {
        let w = draw_noise(&model, &mut rng);
        if w.norm() > p.w_bound {
            outside += 1;
        }
        second += &w * w.transpose();
        mean += w;
    }
    mean /= draws as f64;
    second /= draws as f64;
    let lmin = linalg::min_eigenvalue(&linalg::symmetrize(&second));
    t.check(mean.norm() <= 0.005, || format!("mean norm {:.4}", mean.norm()));
    t.check(lmin >= p.sigma_sq_eff, || format!("empirical lambda_min {lmin:.5} < {:.5}", p.sigma_sq_eff));
    t.check(outside == 0, || format!("{outside} draws above W"));
    t.note(format!("W={:.4} sigma_eff^2={:.6} mean norm {:.4} lambda_min {lmin:.5}", p.w_bound, p.sigma_sq_eff, mean.norm()));
    Ok(t.finish("noise_truncation"))
}

/// Every suite, in a fixed order.
pub fn validate(opts: &ValidateOptions) -> Result<ValidationReport> {
    type Suite = fn(&ValidateOptions) -> Result<SuiteResult>;
    const SUITES: [Suite; 8] = [
        lyapunov_suite,
        optimality_suite,
        gradient_fidelity_suite,
        one_point_suite,
        corrupted_gd_suite,
        exploration_suite,
        mixing_suite,
        truncation_suite,
    ];
    let mut suites = Vec::new();
    for suite in SUITES {
        suites.push(suite(opts).or_else(|e| match e {
            // A suite that cannot run at all counts as one failed check.
            ExperimentError::Core(_) | ExperimentError::Fit(_) | ExperimentError::Invalid(_) => Ok(SuiteResult {
                name: "error",
                checks: 1,
                failures: 1,
                detail: e.to_string(),
            }),
            other => Err(other),
        })?);
    }
    Ok(ValidationReport { suites })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ValidateOptions {
        ValidateOptions { quick: true, ..Default::default() }
    }

    #[test]
    fn random_systems_cover_the_dimension_range() {
        let systems = random_systems(50, 0);
        assert!(systems.iter().all(|(s, _)| (1..=4).contains(&s.state_dim()) && (1..=4).contains(&s.input_dim())));
        assert!(systems.iter().any(|(s, _)| s.state_dim() == 4));
        assert!(systems.iter().any(|(s, _)| s.input_dim() == 1));
    }

    #[test]
    fn finite_differences_match_the_scalar_closed_form() {
        let cfg = Benchmark::Scalar.config();
        let sys = cfg.system(1000).unwrap();
        let k = Controller::new(Matrix::from_element(1, 1, -0.2)).unwrap();
        // J(k) = σ²(1 + k²) / (1 − (0.5 + k)²)
        let s2 = sys.noise().covariance()[(0, 0)];
        let a = 0.5 - 0.2;
        let dj = s2 * (2.0 * -0.2 * (1.0 - a * a) + 2.0 * a * (1.0 + 0.04)) / (1.0 - a * a).powi(2);
        let fd = finite_difference_gradient(&sys, &k, 1e-5)[(0, 0)];
        assert!((fd - dj).abs() < 1e-7 * dj.abs(), "{fd} vs {dj}");
    }

    #[test]
    fn quick_suites_pass() {
        for suite in [lyapunov_suite, optimality_suite, mixing_suite, truncation_suite, one_point_suite] {
            let r = suite(&quick()).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn sign_flipped_gradient_fails_fidelity() {
        fn flipped(sys: &LqrSystem, k: &Controller) -> lqrpg_core::Result<Matrix> {
            exact_policy_gradient(sys, k).map(|g| -g)
        }
        let r = gradient_fidelity_suite(&ValidateOptions { gradient: flipped, ..quick() }).unwrap();
        assert!(!r.passed());
        assert!(r.failures >= 10, "{r:?}");
    }
}

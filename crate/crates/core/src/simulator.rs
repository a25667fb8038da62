//! Stochastic rollouts of the true plant.

use alloc::vec::Vec;

#[allow(unused_imports)] // unused whenever std is linked in
use num_traits::Float;

use rand_core::RngCore;

use crate::error::{invalid, mismatch, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::lqr::{Controller, LqrSystem, NoiseKind, NoiseModel};
use crate::rng::fill_normal;
use crate::smoothing::sample_ball;

/// States with `‖x‖` above this are reported as [`Error::NumericOverflow`].
pub const OVERFLOW_GUARD: f64 = 1e12;

/// State at round `t` together with the cost paid in the previous round.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutState {
    pub x: Vector,
    pub t: u64,
    pub cost_last: f64,
}

impl RolloutState {
    /// `x₀ = 0`.
    pub fn origin(state_dim: usize) -> Self {
        Self { x: Vector::zeros(state_dim), t: 0, cost_last: 0.0 }
    }
}

/// One noise sample `w_t`.
pub fn draw_noise<R: RngCore + ?Sized>(model: &NoiseModel, rng: &mut R) -> Vector {
    let mut z = Vector::zeros(model.dim());
    let mut w = Vector::zeros(model.dim());
    draw_noise_into(model, rng, &mut z, &mut w);
    w
}

fn draw_noise_into<R: RngCore + ?Sized>(model: &NoiseModel, rng: &mut R, z: &mut Vector, out: &mut Vector) {
    match model.kind() {
        NoiseKind::Disabled => {
            out.fill(0.0);
            return;
        }
        NoiseKind::BoundedIid => {
            let d = model.dim() as f64;
            let b = sample_ball(model.dim(), rng);
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi = bi * (d + 2.0).sqrt();
            }
        }
        NoiseKind::TruncatedGaussian => {
            let radius = model.truncation_radius().expect("truncated model has a radius");
            // ‖Σ^{-1/2}w‖ = ‖z‖ for w = Lz; redraw outside the ellipsoid
            loop {
                fill_normal(rng, z.as_mut_slice());
                if z.norm() <= radius {
                    break;
                }
            }
        }
    }
    out.gemv(1.0, model.factor(), z, 0.0);
}

/// Noise-truncation parameters for Gaussian noise over a horizon `T` at confidence `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationParams {
    /// `sqrt(5·d_x·log(T/δ))`, the radius of the whitened truncation ball.
    pub radius: f64,
    /// `sqrt(5·d_x·λ_max(Σ_w)·log(T/δ))`.
    pub w_bound: f64,
    /// `λ_min(Σ_w)·(1 − sqrt(3δ/T))`.
    pub sigma_sq_eff: f64,
    pub delta: f64,
    pub horizon: f64,
}

pub fn truncation_params(covariance: &Matrix, horizon: u64, delta: f64) -> Result<TruncationParams> {
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(invalid("delta must lie in (0, 1/3)"));
    }
    let t = horizon as f64;
    if !(t / delta > core::f64::consts::E) {
        return Err(invalid("T/delta must exceed e"));
    }
    if !covariance.is_square() || covariance.nrows() == 0 {
        return Err(mismatch("covariance must be square and non-empty"));
    }
    let d = covariance.nrows() as f64;
    let log = (t / delta).ln();
    let radius = (5.0 * d * log).sqrt();
    Ok(TruncationParams {
        radius,
        w_bound: radius * linalg::max_eigenvalue(covariance).sqrt(),
        sigma_sq_eff: linalg::min_eigenvalue(covariance) * (1.0 - (3.0 * delta / t).sqrt()),
        delta,
        horizon: t,
    })
}

impl TruncationParams {
    /// Truncated Gaussian noise announcing `W = w_bound` and `σ² = sigma_sq_eff`.
    pub fn noise_model(&self, covariance: Matrix) -> Result<NoiseModel> {
        NoiseModel::truncated_gaussian(covariance, self.radius)?
            .with_sigma_sq(self.sigma_sq_eff)?
            .with_bound(self.w_bound)
    }
}

fn quad_form(m: &Matrix, v: &Vector) -> f64 {
    let mut acc = 0.0;
    for j in 0..v.len() {
        let mut row = 0.0;
        for i in 0..v.len() {
            row += m[(i, j)] * v[i];
        }
        acc += row * v[j];
    }
    acc
}

#[derive(Debug, Clone)]
struct Buffers {
    u: Vector,
    z: Vector,
    w: Vector,
    next: Vector,
}

impl Buffers {
    fn new(state_dim: usize, input_dim: usize) -> Self {
        Self {
            u: Vector::zeros(input_dim),
            z: Vector::zeros(state_dim),
            w: Vector::zeros(state_dim),
            next: Vector::zeros(state_dim),
        }
    }

    /// Fills `u` and `next` for state `x` and returns the stage cost.
    fn transition<R: RngCore + ?Sized>(&mut self, sys: &LqrSystem, k: &Controller, x: &Vector, rng: &mut R) -> f64 {
        self.u.gemv(1.0, k.gain(), x, 0.0);
        let cost = quad_form(sys.q(), x) + quad_form(sys.r(), &self.u);
        draw_noise_into(sys.noise(), rng, &mut self.z, &mut self.w);
        self.next.copy_from(&self.w);
        self.next.gemv(1.0, sys.a(), x, 1.0);
        self.next.gemv(1.0, sys.b(), &self.u, 1.0);
        cost
    }
}

fn guard(next: &Vector, step: u64) -> Result<()> {
    let norm = next.norm();
    if norm <= OVERFLOW_GUARD {
        Ok(())
    } else {
        Err(Error::NumericOverflow { step, norm })
    }
}

/// One round: `u = Kx`, `c = xᵀQx + uᵀRu`, `x' = Ax + Bu + w`.
pub fn step<R: RngCore + ?Sized>(
    sys: &LqrSystem,
    k: &Controller,
    state: &RolloutState,
    rng: &mut R,
) -> Result<RolloutState> {
    sys.check_controller(k)?;
    if state.x.len() != sys.state_dim() {
        return Err(mismatch("state has the wrong dimension"));
    }
    let mut buf = Buffers::new(sys.state_dim(), sys.input_dim());
    let cost = buf.transition(sys, k, &state.x, rng);
    guard(&buf.next, state.t)?;
    Ok(RolloutState { x: buf.next, t: state.t + 1, cost_last: cost })
}

/// Trajectory of a fixed controller: `states[0..=n]`, `inputs[0..n]`, `costs[0..n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub states: Vec<Vector>,
    pub inputs: Vec<Vector>,
    pub costs: Vec<f64>,
}

pub fn rollout_fixed<R: RngCore + ?Sized>(
    sys: &LqrSystem,
    k: &Controller,
    x0: &Vector,
    steps: usize,
    rng: &mut R,
) -> Result<Rollout> {
    if steps == 0 {
        return Err(invalid("rollout needs at least one step"));
    }
    let mut state = RolloutState { x: x0.clone(), t: 0, cost_last: 0.0 };
    let mut out = Rollout {
        states: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps),
        costs: Vec::with_capacity(steps),
    };
    out.states.push(state.x.clone());
    for _ in 0..steps {
        out.inputs.push(k.gain() * &state.x);
        state = step(sys, k, &state, rng)?;
        out.costs.push(state.cost_last);
        out.states.push(state.x.clone());
    }
    Ok(out)
}

/// Exact second moments `E[x_t x_tᵀ]`, `t = 0..=steps`, from `S_{t+1} = Σ_w + M S_t Mᵀ`.
pub fn covariance_recursion(sys: &LqrSystem, k: &Controller, x0: &Vector, steps: usize) -> Vec<Matrix> {
    let m = sys.closed_loop(k);
    let mt = m.transpose();
    let mut s = x0 * x0.transpose();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s.clone());
    for _ in 0..steps {
        s = sys.noise().covariance() + &m * &s * &mt;
        out.push(s.clone());
    }
    out
}

/// `E[c] = tr((Q + KᵀRK) S)` for second moment `S`.
pub fn expected_cost(sys: &LqrSystem, k: &Controller, second_moment: &Matrix) -> f64 {
    let stage = sys.q() + k.gain().transpose() * sys.r() * k.gain();
    linalg::trace_product(&stage, second_moment)
}

/// A running plant: owns its state and noise stream and reuses buffers across rounds.
#[derive(Debug, Clone)]
pub struct Simulation<R> {
    system: LqrSystem,
    x: Vector,
    buf: Buffers,
    t: u64,
    rng: R,
}

impl<R: RngCore> Simulation<R> {
    /// Starts at `x₀ = 0`.
    pub fn new(system: LqrSystem, rng: R) -> Self {
        let (dx, du) = (system.state_dim(), system.input_dim());
        Self { system, x: Vector::zeros(dx), buf: Buffers::new(dx, du), t: 0, rng }
    }

    pub fn with_state(mut self, x: Vector) -> Result<Self> {
        if x.len() != self.system.state_dim() {
            return Err(mismatch("state has the wrong dimension"));
        }
        self.x = x;
        Ok(self)
    }

    pub fn system(&self) -> &LqrSystem {
        &self.system
    }

    pub fn state(&self) -> &Vector {
        &self.x
    }

    /// Input applied in the most recent round.
    pub fn last_input(&self) -> &Vector {
        &self.buf.u
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    /// Plays `u = Kx` for one round and returns its cost.
    ///
    /// `k` must have shape `d_u × d_x`.
    pub fn advance(&mut self, k: &Controller) -> Result<f64> {
        debug_assert_eq!(k.gain().shape(), (self.system.input_dim(), self.system.state_dim()));
        let cost = self.buf.transition(&self.system, k, &self.x, &mut self.rng);
        guard(&self.buf.next, self.t)?;
        core::mem::swap(&mut self.x, &mut self.buf.next);
        self.t += 1;
        Ok(cost)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lqr::{infinite_horizon_cost, solve_sigma, RegularityConstants, SolverOptions};
    use crate::rng::SeedStreams;
    use crate::test_support::{random_admissible_controller, random_stable_system, scalar_system};

    fn noiseless(a: Matrix, b: Matrix) -> LqrSystem {
        let (dx, du) = (a.nrows(), b.ncols());
        LqrSystem::new(a, b, Matrix::identity(dx, dx), Matrix::identity(du, du), NoiseModel::disabled(dx)).unwrap()
    }

    #[test]
    fn deterministic_examples() {
        let sys = noiseless(Matrix::zeros(2, 2), Matrix::identity(2, 2));
        let mut rng = SeedStreams::new(0).noise();
        let s0 = RolloutState { x: Vector::from_vec(alloc::vec![1.0, 1.0]), t: 0, cost_last: 0.0 };
        let s1 = step(&sys, &Controller::zeros(2, 2), &s0, &mut rng).unwrap();
        assert_eq!(s1.x, Vector::zeros(2));
        assert_eq!(s1.cost_last, 2.0);

        let sys = noiseless(Matrix::from_element(1, 1, 0.5), Matrix::from_element(1, 1, 1.0));
        let x0 = Vector::from_element(1, 1.0);
        let ro = rollout_fixed(&sys, &Controller::zeros(1, 1), &x0, 20, &mut rng).unwrap();
        for (t, x) in ro.states.iter().enumerate() {
            assert_eq!(x[0], 0.5f64.powi(t as i32));
        }
        assert!(ro.costs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn zero_state_and_noise_cost_nothing() {
        let sys = noiseless(Matrix::from_element(1, 1, 0.9), Matrix::from_element(1, 1, 1.0));
        let mut sim = Simulation::new(sys, SeedStreams::new(1).noise());
        let k = Controller::new(Matrix::from_element(1, 1, -0.3)).unwrap();
        for _ in 0..100 {
            assert_eq!(sim.advance(&k).unwrap(), 0.0);
        }
    }

    #[test]
    fn overflow_is_typed() {
        let sys = scalar_system(1.0, 1.0, 1.0, 1.0, 1.0);
        let mut sim = Simulation::new(sys, SeedStreams::new(1).noise());
        let k = Controller::new(Matrix::from_element(1, 1, 9.0)).unwrap();
        let err = (0..100).find_map(|_| sim.advance(&k).err());
        assert!(matches!(err, Some(Error::NumericOverflow { .. })));
    }

    #[test]
    fn simulation_and_step_agree_bit_for_bit() {
        let (sys, k) = random_stable_system(3, 2, 0.8, &mut SeedStreams::new(2).aux(0));
        let mut sim = Simulation::new(sys.clone(), SeedStreams::new(9).noise());
        let mut rng = SeedStreams::new(9).noise();
        let mut state = RolloutState::origin(3);
        for _ in 0..200 {
            let c = sim.advance(&k).unwrap();
            state = step(&sys, &k, &state, &mut rng).unwrap();
            assert_eq!(c, state.cost_last);
            assert_eq!(sim.state(), &state.x);
        }
    }

    #[test]
    fn empirical_cost_matches_analytic_cost() {
        let sys = scalar_system(0.5, 1.0, 1.0, 1.0, 1.0);
        let k = Controller::new(Matrix::from_element(1, 1, -0.2)).unwrap();
        let j = infinite_horizon_cost(&sys, &k);
        let mut sim = Simulation::new(sys, SeedStreams::new(3).noise());
        for _ in 0..100 {
            sim.advance(&k).unwrap();
        }
        // batch means for the standard error of a correlated series
        let (batches, len) = (100, 100);
        let means: Vec<f64> = (0..batches)
            .map(|_| (0..len).map(|_| sim.advance(&k).unwrap()).sum::<f64>() / len as f64)
            .collect();
        let mean = means.iter().sum::<f64>() / batches as f64;
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let se = (var / batches as f64).sqrt();
        assert!((mean - j).abs() <= 3.0 * se, "mean {mean} vs J {j} (se {se})");
    }

    #[test]
    fn truncation_parameters() {
        let p = truncation_params(&Matrix::identity(2, 2), 1000, 0.01).unwrap();
        assert!((p.w_bound - 10.7298).abs() < 1e-4, "{}", p.w_bound);
        assert!((p.sigma_sq_eff - 0.994523).abs() < 1e-6, "{}", p.sigma_sq_eff);
        let tiny = truncation_params(&Matrix::identity(2, 2), 1000, 1e-300).unwrap();
        assert!((tiny.sigma_sq_eff - 1.0).abs() < 1e-12);
        assert!(truncation_params(&Matrix::identity(2, 2), 1000, 1.0 / 3.0).is_err());
        let two = Matrix::identity(1, 1) * 2.0;
        assert!(truncation_params(&two, 0, 0.3).is_err());
        assert!(truncation_params(&two, 1, 0.3).is_ok());
    }

    #[test]
    fn truncated_gaussian_moments() {
        let p = truncation_params(&Matrix::identity(2, 2), 1000, 0.01).unwrap();
        let model = p.noise_model(Matrix::identity(2, 2)).unwrap();
        let mut rng = SeedStreams::new(4).noise();
        let n = 1_000_000;
        let mut mean = Vector::zeros(2);
        let mut cov = Matrix::zeros(2, 2);
        for _ in 0..n {
            let w = draw_noise(&model, &mut rng);
            assert!(w.norm() <= model.bound_w());
            cov += &w * w.transpose();
            mean += w;
        }
        mean /= n as f64;
        cov /= n as f64;
        assert!(mean.norm() <= 0.005, "{}", mean.norm());
        assert!(linalg::min_eigenvalue(&cov) >= p.sigma_sq_eff);
    }

    #[test]
    fn covariance_shape_is_reproduced() {
        let cov = Matrix::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![1.0, 4.0]));
        for model in [NoiseModel::truncated_gaussian(cov.clone(), 6.0).unwrap(), NoiseModel::bounded_iid(cov.clone()).unwrap()] {
            let mut rng = SeedStreams::new(5).noise();
            let (mut s0, mut s1) = (0.0, 0.0);
            for _ in 0..400_000 {
                let w = draw_noise(&model, &mut rng);
                assert!(w.norm() <= model.bound_w() + 1e-12);
                s0 += w[0] * w[0];
                s1 += w[1] * w[1];
            }
            let ratio = s1 / s0;
            assert!((ratio / 4.0 - 1.0).abs() < 0.02, "{ratio}");
        }
    }

    #[test]
    fn identical_seeds_give_identical_trajectories() {
        let (sys, k) = random_stable_system(2, 1, 0.9, &mut SeedStreams::new(6).aux(0));
        let x0 = Vector::zeros(2);
        let a = rollout_fixed(&sys, &k, &x0, 500, &mut SeedStreams::new(8).noise()).unwrap();
        let b = rollout_fixed(&sys, &k, &x0, 500, &mut SeedStreams::new(8).noise()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn covariance_recursion_mixes_within_envelope() {
        let streams = SeedStreams::new(7);
        for i in 0..20 {
            let mut rng = streams.aux(i);
            let (sys, k0) = random_stable_system(3, 2, 0.9, &mut rng);
            let c = RegularityConstants::for_system(&sys, &k0).unwrap();
            let k = random_admissible_controller(&sys, &k0, c.nu, &mut rng);
            let sigma = solve_sigma(&sys, &k, SolverOptions::default()).unwrap();
            let x0 = Vector::from_fn(3, |i, _| 3.0 - i as f64);
            let gap0 = linalg::spectral_norm(&(&x0 * x0.transpose() - &sigma));
            for (t, s) in covariance_recursion(&sys, &k, &x0, 200).iter().enumerate() {
                let err = linalg::spectral_norm(&(s - &sigma));
                let env = c.kappa.powi(2) * (-2.0 * c.gamma * t as f64).exp() * gap0;
                assert!(err <= env * (1.0 + 1e-9) + 1e-12, "controller {i}, t={t}: {err} > {env}");
            }
        }
    }

    #[test]
    fn cost_transient_at_mixing_time_is_tiny() {
        let sys = scalar_system(0.5, 1.0, 1.0, 1.0, 1.0);
        let k0 = Controller::zeros(1, 1);
        let c = RegularityConstants::for_system(&sys, &k0).unwrap();
        let horizon = 1000.0f64;
        let tau = (2.0 * c.kappa.powi(2) * (7.0 * c.kappa * horizon).ln()).ceil() as usize;
        let sigma = solve_sigma(&sys, &k0, SolverOptions::default()).unwrap();
        let x0 = Vector::from_element(1, 5.0);
        let s = &covariance_recursion(&sys, &k0, &x0, tau)[tau];
        let gap = (expected_cost(&sys, &k0, s) - infinite_horizon_cost(&sys, &k0)).abs();
        let env = c.nu * c.kappa.powi(2) / c.sigma_sq
            * (-2.0 * c.gamma * tau as f64).exp()
            * linalg::spectral_norm(&(&x0 * x0.transpose() - &sigma));
        assert!(gap <= env);
        assert!(env < 1.0 / horizon.powi(2) * 1e3);
    }
}

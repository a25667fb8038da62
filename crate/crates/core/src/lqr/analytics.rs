use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

use super::system::{Controller, LqrSystem};

/// Slack on the unit-circle test: `ρ(A+BK) ≥ 1 − STABILITY_SLACK` counts as unstable.
pub const STABILITY_SLACK: f64 = 1e-9;

/// Stopping rule for the fixed-point solvers.
///
/// Iteration stops once `‖X_{k+1} − X_k‖_F ≤ tol · max(1, ‖X_{k+1}‖_F)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 1_000_000 }
    }
}

/// `(P_K, Σ_K, J(K))` for a fixed stabilizing controller.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateSolution {
    /// Cost-to-go, `P = Q + KᵀRK + (A+BK)ᵀP(A+BK)`.
    pub p: Matrix,
    /// Steady-state covariance, `Σ = Σ_w + (A+BK)Σ(A+BK)ᵀ`.
    pub sigma: Matrix,
    /// `tr(P Σ_w)`.
    pub cost: f64,
}

fn ensure_stable(closed_loop: &Matrix) -> Result<f64> {
    let rho = linalg::spectral_radius(closed_loop);
    if rho < 1.0 - STABILITY_SLACK {
        Ok(rho)
    } else {
        Err(Error::Unstable(rho))
    }
}

/// Fixed-point iteration for the Stein equation `X = C + M X Mᵀ`, from `X₀ = C`.
fn stein(m: &Matrix, c: &Matrix, opts: SolverOptions) -> Result<Matrix> {
    let mt = m.transpose();
    let mut x = c.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let next = c + m * &x * &mt;
        let diff = (&next - &x).norm();
        let scale = next.norm().max(1.0);
        x = next;
        if !diff.is_finite() {
            break;
        }
        residual = diff / scale;
        if residual <= opts.tol {
            return Ok(linalg::symmetrize(&x));
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual })
}

/// Steady-state covariance `Σ_K` of the closed loop `A + BK`.
pub fn solve_sigma(sys: &LqrSystem, k: &Controller, opts: SolverOptions) -> Result<Matrix> {
    sys.check_controller(k)?;
    let m = sys.closed_loop(k);
    ensure_stable(&m)?;
    stein(&m, sys.noise().covariance(), opts)
}

/// Cost-to-go `P_K` of the policy Bellman equation.
pub fn solve_p(sys: &LqrSystem, k: &Controller, opts: SolverOptions) -> Result<Matrix> {
    sys.check_controller(k)?;
    let m = sys.closed_loop(k);
    ensure_stable(&m)?;
    let stage = sys.q() + k.gain().transpose() * sys.r() * k.gain();
    stein(&m.transpose(), &stage, opts)
}

pub fn steady_state(sys: &LqrSystem, k: &Controller, opts: SolverOptions) -> Result<SteadyStateSolution> {
    let p = solve_p(sys, k, opts)?;
    let sigma = solve_sigma(sys, k, opts)?;
    let cost = linalg::trace_product(&p, sys.noise().covariance());
    Ok(SteadyStateSolution { p, sigma, cost })
}

/// `J(K) = tr(P_K Σ_w)`, or `+∞` when `A + BK` is not stable.
///
/// # Panics
///
/// If `k` does not have shape `d_u × d_x`.
pub fn infinite_horizon_cost(sys: &LqrSystem, k: &Controller) -> f64 {
    sys.check_controller(k).expect("controller shape");
    match solve_p(sys, k, SolverOptions::default()) {
        Ok(p) => linalg::trace_product(&p, sys.noise().covariance()),
        Err(_) => f64::INFINITY,
    }
}

/// `∇J(K) = 2 E_K Σ_K` with `E_K = RK + BᵀP_K(A+BK)`.
pub fn exact_policy_gradient(sys: &LqrSystem, k: &Controller) -> Result<Matrix> {
    let ss = steady_state(sys, k, SolverOptions::default())?;
    Ok(gradient_from(sys, k, &ss))
}

pub(crate) fn gradient_from(sys: &LqrSystem, k: &Controller, ss: &SteadyStateSolution) -> Matrix {
    let e = sys.r() * k.gain() + sys.b().transpose() * &ss.p * sys.closed_loop(k);
    e * &ss.sigma * 2.0
}

/// Optimal controller and cost from the discrete algebraic Riccati equation,
/// solved by value iteration from `P₀ = Q`.
pub fn solve_optimal(sys: &LqrSystem, opts: SolverOptions) -> Result<(Controller, f64)> {
    let (a, b, q, r) = (sys.a(), sys.b(), sys.q(), sys.r());
    let at = a.transpose();
    let bt = b.transpose();
    let riccati_gain = |p: &Matrix| -> Option<Matrix> {
        let btp = &bt * p;
        let s = r + &btp * b;
        s.cholesky().map(|c| c.solve(&(btp * a)))
    };

    let mut p = q.clone();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let Some(gain) = riccati_gain(&p) else { break };
        let atp = &at * &p;
        let next = linalg::symmetrize(&(q + &atp * a - &atp * b * gain));
        let diff = (&next - &p).norm();
        let scale = next.norm().max(1.0);
        p = next;
        if !diff.is_finite() {
            break;
        }
        residual = diff / scale;
        if residual <= opts.tol {
            converged = true;
            break;
        }
    }
    let no_convergence = Error::NoConvergence { iterations: opts.max_iter, residual };
    if !converged {
        return Err(no_convergence);
    }
    let gain = riccati_gain(&p).ok_or(no_convergence.clone())?;
    let k_star = Controller::new(-gain)?;
    if ensure_stable(&sys.closed_loop(&k_star)).is_err() {
        return Err(no_convergence);
    }
    let j_star = linalg::trace_product(&p, sys.noise().covariance());
    Ok((k_star, j_star))
}

/// Ground-truth oracle for diagnostics: `J`, `∇J` and the optimum of one plant.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    system: LqrSystem,
    k_star: Controller,
    j_star: f64,
}

impl GroundTruth {
    pub fn new(system: LqrSystem) -> Result<Self> {
        let (k_star, j_star) = solve_optimal(&system, SolverOptions::default())?;
        Ok(Self { system, k_star, j_star })
    }

    pub fn system(&self) -> &LqrSystem {
        &self.system
    }

    pub fn k_star(&self) -> &Controller {
        &self.k_star
    }

    pub fn j_star(&self) -> f64 {
        self.j_star
    }

    pub fn cost(&self, k: &Controller) -> f64 {
        infinite_horizon_cost(&self.system, k)
    }

    pub fn gradient(&self, k: &Controller) -> Option<Matrix> {
        exact_policy_gradient(&self.system, k).ok()
    }
}

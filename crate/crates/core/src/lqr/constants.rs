use alloc::format;

#[allow(unused_imports)] // unused whenever std is linked in
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::linalg;

use super::analytics::infinite_horizon_cost;
use super::system::{Controller, LqrSystem};

/// Regularity constants of `J` over the admissible set `{K : J(K) ≤ ν}`.
///
/// All derived fields follow from `(ν, α₀, ψ, σ², d_x)`:
///
/// | field | value |
/// |-------|-------|
/// | `kappa` | `sqrt(ν / (α₀σ²))` |
/// | `gamma` | `1 / (2κ²)` |
/// | `d0` | `1 / (8ψκ³)` |
/// | `lipschitz` | `4ψνκ⁷ / α₀` |
/// | `smoothness` | `112·sqrt(d_x)·νψ²κ⁸ / α₀` |
/// | `pl` | `4ν / κ⁴` |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityConstants {
    pub nu: f64,
    pub alpha0: f64,
    pub psi: f64,
    pub sigma_sq: f64,
    pub state_dim: usize,
    pub kappa: f64,
    pub gamma: f64,
    /// Local radius `D₀`.
    pub d0: f64,
    /// Local Lipschitz constant `G`.
    pub lipschitz: f64,
    /// Local smoothness constant `β`.
    pub smoothness: f64,
    /// PL constant `μ`.
    pub pl: f64,
}

pub fn regularity_constants(
    nu: f64,
    alpha0: f64,
    psi: f64,
    sigma_sq: f64,
    state_dim: usize,
) -> Result<RegularityConstants> {
    for (name, v) in [("nu", nu), ("alpha0", alpha0), ("sigma_sq", sigma_sq)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if !(psi >= 1.0) || !psi.is_finite() {
        return Err(invalid(format!("psi must be finite and at least 1, got {psi}")));
    }
    if state_dim == 0 {
        return Err(invalid("state dimension must be positive"));
    }
    let kappa = (nu / (alpha0 * sigma_sq)).sqrt();
    if kappa < 1.0 {
        return Err(invalid(format!("nu < alpha0·sigma_sq gives kappa = {kappa} < 1")));
    }
    let dx = state_dim as f64;
    Ok(RegularityConstants {
        nu,
        alpha0,
        psi,
        sigma_sq,
        state_dim,
        kappa,
        gamma: 1.0 / (2.0 * kappa.powi(2)),
        d0: 1.0 / (8.0 * psi * kappa.powi(3)),
        lipschitz: 4.0 * psi * nu * kappa.powi(7) / alpha0,
        smoothness: 112.0 * dx.sqrt() * nu * psi.powi(2) * kappa.powi(8) / alpha0,
        pl: 4.0 * nu / kappa.powi(4),
    })
}

impl RegularityConstants {
    /// Constants for `sys` with `ν = 4·J(K₀)`, `α₀`, `ψ` and `σ²` read off the plant.
    pub fn for_system(sys: &LqrSystem, k0: &Controller) -> Result<Self> {
        let j0 = infinite_horizon_cost(sys, k0);
        if !j0.is_finite() {
            return Err(invalid("initial controller does not stabilize the plant"));
        }
        Self::for_system_with_nu(sys, 4.0 * j0)
    }

    pub fn for_system_with_nu(sys: &LqrSystem, nu: f64) -> Result<Self> {
        regularity_constants(nu, sys.alpha0(), sys.psi(), sys.noise().sigma_sq(), sys.state_dim())
    }

    /// Bound `6κ⁴W` on the state norm under slowly switched admissible controllers.
    pub fn state_bound(&self, bound_w: f64) -> f64 {
        6.0 * self.kappa.powi(4) * bound_w
    }
}

/// Outcome of the strong-stability certificate for one controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrongStability {
    /// `J(K) ≤ ν` and `ρ(A+BK) ≤ 1 − γ` (up to `1e-9` relative slack).
    Admissible { kappa: f64, gamma: f64, spectral_radius: f64 },
    /// `J(K) ≤ ν` but the spectral radius exceeds `1 − γ`; only possible when
    /// the announced `α₀` or `σ²` overstate the plant's true values.
    CertificateViolated { kappa: f64, gamma: f64, spectral_radius: f64 },
    NotAdmissible { cost: f64 },
}

pub fn strong_stability(sys: &LqrSystem, k: &Controller, consts: &RegularityConstants) -> StrongStability {
    let cost = infinite_horizon_cost(sys, k);
    if !(cost <= consts.nu) {
        return StrongStability::NotAdmissible { cost };
    }
    let (kappa, gamma) = (consts.kappa, consts.gamma);
    let spectral_radius = linalg::spectral_radius(&sys.closed_loop(k));
    if spectral_radius <= 1.0 - gamma * (1.0 - 1e-9) {
        StrongStability::Admissible { kappa, gamma, spectral_radius }
    } else {
        StrongStability::CertificateViolated { kappa, gamma, spectral_radius }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lqr::{exact_policy_gradient, solve_optimal, steady_state, SolverOptions};
    use crate::rng::SeedStreams;
    use crate::test_support::{random_admissible_controller, random_stable_system, scalar_system};

    #[test]
    fn hand_evaluated_constants() {
        let c = regularity_constants(4.0, 1.0, 1.0, 1.0, 1).unwrap();
        assert_eq!(c.kappa, 2.0);
        assert_eq!(c.gamma, 1.0 / 8.0);
        assert_eq!(c.d0, 1.0 / 64.0);
        assert_eq!(c.pl, 1.0);
        assert_eq!(c.lipschitz, 2048.0);
        assert_eq!(c.smoothness, 114_688.0);

        let c = regularity_constants(1.0, 1.0, 1.0, 1.0, 3).unwrap();
        assert_eq!((c.kappa, c.gamma), (1.0, 0.5));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(regularity_constants(0.0, 1.0, 1.0, 1.0, 1).is_err());
        assert!(regularity_constants(4.0, -1.0, 1.0, 1.0, 1).is_err());
        assert!(regularity_constants(4.0, 1.0, 0.5, 1.0, 1).is_err());
        assert!(regularity_constants(4.0, 1.0, 1.0, f64::NAN, 1).is_err());
        assert!(regularity_constants(0.5, 1.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn unstable_controller_is_not_admissible() {
        let sys = scalar_system(0.5, 1.0, 1.0, 1.0, 1.0);
        let c = RegularityConstants::for_system(&sys, &Controller::zeros(1, 1)).unwrap();
        let k = Controller::new(crate::Matrix::from_element(1, 1, 0.6)).unwrap();
        assert!(matches!(strong_stability(&sys, &k, &c), StrongStability::NotAdmissible { cost } if cost.is_infinite()));
    }

    #[test]
    fn admissible_controllers_are_strongly_stable() {
        let streams = SeedStreams::new(21);
        for i in 0..20 {
            let mut rng = streams.aux(i);
            let (sys, k0) = random_stable_system(3, 2, 0.8, &mut rng);
            let c = RegularityConstants::for_system(&sys, &k0).unwrap();
            let k = random_admissible_controller(&sys, &k0, c.nu, &mut rng);
            match strong_stability(&sys, &k, &c) {
                StrongStability::Admissible { spectral_radius, gamma, .. } => {
                    assert!(spectral_radius <= 1.0 - gamma)
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn trace_bounds_pl_and_lipschitz_hold_on_samples() {
        let streams = SeedStreams::new(22);
        let mut checked = 0;
        for i in 0..10 {
            let mut rng = streams.aux(i);
            let (sys, k0) = random_stable_system(2, 2, 0.7, &mut rng);
            let c = RegularityConstants::for_system(&sys, &k0).unwrap();
            let (_, j_star) = solve_optimal(&sys, SolverOptions::default()).unwrap();
            for _ in 0..5 {
                let k = random_admissible_controller(&sys, &k0, c.nu, &mut rng);
                let ss = steady_state(&sys, &k, SolverOptions::default()).unwrap();
                assert!(ss.p.trace() <= ss.cost / c.sigma_sq);
                assert!(ss.sigma.trace() <= ss.cost / c.alpha0);
                let g = exact_policy_gradient(&sys, &k).unwrap();
                assert!(c.pl * (ss.cost - j_star) <= g.norm_squared());
                let d = crate::smoothing::sample_sphere(2, 2, &mut rng);
                let k2 = k.perturbed(c.d0, d.as_matrix());
                let j2 = infinite_horizon_cost(&sys, &k2);
                assert!((ss.cost - j2).abs() <= c.lipschitz * c.d0);
                checked += 1;
            }
        }
        assert_eq!(checked, 50);
    }
}

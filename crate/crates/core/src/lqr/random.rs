#[allow(unused_imports)] // unused whenever std is linked in
use num_traits::Float;

use rand_core::RngCore;

use crate::linalg::{self, Matrix};
use crate::rng::{fill_normal, uniform};

use super::analytics::infinite_horizon_cost;
use super::system::{Controller, LqrSystem, NoiseModel};

fn normal_matrix<R: RngCore + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    fill_normal(rng, m.as_mut_slice());
    m
}

fn random_spd<R: RngCore + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Matrix {
    // random orthogonal basis from QR, eigenvalues uniform in [lo, hi]
    let q = normal_matrix(n, n, rng).qr().q();
    let eig = nalgebra::DVector::from_fn(n, |_, _| lo + (hi - lo) * uniform(rng));
    linalg::symmetrize(&(&q * Matrix::from_diagonal(&eig) * q.transpose()))
}

/// Random plant with `ρ(A) = spectral_radius`, normalized costs (`0.2 ⪯ Q, R ⪯ I`),
/// bounded noise with covariance eigenvalues in `[0.5, 1.5]`, and a stabilizing
/// initial gain `K₀` with `ρ(A+BK₀) < 0.95`.
pub fn random_stable_system<R: RngCore + ?Sized>(
    state_dim: usize,
    input_dim: usize,
    spectral_radius: f64,
    rng: &mut R,
) -> (LqrSystem, Controller) {
    let raw = normal_matrix(state_dim, state_dim, rng);
    let a = &raw * (spectral_radius / linalg::spectral_radius(&raw).max(1e-12));
    let b = normal_matrix(state_dim, input_dim, rng) / (input_dim as f64).sqrt();
    let q = random_spd(state_dim, 0.2, 1.0, rng);
    let r = random_spd(input_dim, 0.2, 1.0, rng);
    let cov = random_spd(state_dim, 0.5, 1.5, rng);
    let noise = NoiseModel::bounded_iid(cov).expect("positive definite covariance");
    let sys = LqrSystem::new(a, b, q, r, noise).expect("consistent random system");
    let k0 = loop {
        let k = Controller::new(normal_matrix(input_dim, state_dim, rng) * 0.1).expect("finite");
        if linalg::spectral_radius(&sys.closed_loop(&k)) < 0.95 {
            break k;
        }
    };
    (sys, k0)
}

/// Random `K = K₀ + sU` (uniform direction, `s ∈ [0, 0.5)`) with `J(K) ≤ ν`.
pub fn random_admissible_controller<R: RngCore + ?Sized>(
    sys: &LqrSystem,
    k0: &Controller,
    nu: f64,
    rng: &mut R,
) -> Controller {
    let mut scale = 0.5;
    loop {
        let u = crate::smoothing::sample_sphere(sys.input_dim(), sys.state_dim(), rng);
        let k = k0.perturbed(scale * uniform(rng), u.as_matrix());
        if infinite_horizon_cost(sys, &k) <= nu {
            return k;
        }
        scale *= 0.9;
    }
}

use alloc::format;

#[allow(unused_imports)] // unused whenever std is linked in
use num_traits::Float;

use crate::error::{invalid, mismatch, Result};
use crate::linalg::{self, Matrix};

/// How the plant noise `w_t` is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Uniform on an ellipsoid: `w = sqrt(d+2)·L·b`, `b` uniform in the unit
    /// ball and `LLᵀ = Σ_w`. Zero mean, covariance `Σ_w`.
    BoundedIid,
    /// `N(0, Σ_w)` conditioned on `‖Σ_w^{-1/2} w‖ ≤ radius`.
    TruncatedGaussian,
    /// `w ≡ 0`; for deterministic checks only.
    Disabled,
}

/// Noise law plus the constants `(σ², W)` the learner is told about.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    kind: NoiseKind,
    covariance: Matrix,
    factor: Matrix,
    sigma_sq: f64,
    bound_w: f64,
    truncation_radius: Option<f64>,
}

impl NoiseModel {
    pub fn bounded_iid(covariance: Matrix) -> Result<Self> {
        let factor = cholesky(&covariance)?;
        let d = covariance.nrows() as f64;
        let bound_w = ((d + 2.0) * linalg::max_eigenvalue(&covariance)).sqrt();
        Ok(Self {
            kind: NoiseKind::BoundedIid,
            sigma_sq: linalg::min_eigenvalue(&covariance),
            covariance,
            factor,
            bound_w,
            truncation_radius: None,
        })
    }

    /// Gaussian noise truncated to the ellipsoid `‖Σ_w^{-1/2} w‖ ≤ radius`.
    ///
    /// `W` defaults to `radius·sqrt(λ_max(Σ_w))`, the largest norm on the
    /// ellipsoid, and `σ²` to `λ_min(Σ_w)`.
    pub fn truncated_gaussian(covariance: Matrix, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("truncation radius must be positive, got {radius}")));
        }
        let factor = cholesky(&covariance)?;
        Ok(Self {
            kind: NoiseKind::TruncatedGaussian,
            sigma_sq: linalg::min_eigenvalue(&covariance),
            bound_w: radius * linalg::max_eigenvalue(&covariance).sqrt(),
            covariance,
            factor,
            truncation_radius: Some(radius),
        })
    }

    /// No noise at all. `σ² = W = 0`, so regularity constants cannot be derived from it.
    pub fn disabled(dim: usize) -> Self {
        Self {
            kind: NoiseKind::Disabled,
            covariance: Matrix::zeros(dim, dim),
            factor: Matrix::zeros(dim, dim),
            sigma_sq: 0.0,
            bound_w: 0.0,
            truncation_radius: None,
        }
    }

    /// Overrides the announced lower eigenvalue bound; must not exceed `λ_min(Σ_w)`.
    pub fn with_sigma_sq(mut self, sigma_sq: f64) -> Result<Self> {
        let lmin = linalg::min_eigenvalue(&self.covariance);
        if !(sigma_sq > 0.0) || sigma_sq > lmin * (1.0 + 1e-12) {
            return Err(invalid(format!("sigma_sq must lie in (0, λ_min(Σ_w) = {lmin}], got {sigma_sq}")));
        }
        self.sigma_sq = sigma_sq;
        Ok(self)
    }

    /// Overrides the announced norm bound; must not undercut the sampler's support.
    pub fn with_bound(mut self, bound_w: f64) -> Result<Self> {
        if !(bound_w >= self.bound_w * (1.0 - 1e-12)) {
            return Err(invalid(format!("bound_W must be at least {}, got {bound_w}", self.bound_w)));
        }
        self.bound_w = bound_w;
        Ok(self)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    /// Lower-triangular `L` with `LLᵀ = Σ_w`.
    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn bound_w(&self) -> f64 {
        self.bound_w
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        self.truncation_radius
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }
}

fn cholesky(cov: &Matrix) -> Result<Matrix> {
    if !cov.is_square() || cov.nrows() == 0 {
        return Err(mismatch("noise covariance must be a non-empty square matrix"));
    }
    if !linalg::is_symmetric(cov, 1e-10) {
        return Err(invalid("noise covariance must be symmetric"));
    }
    cov.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| invalid("noise covariance must be positive definite"))
}

/// A linear state-feedback gain `u = Kx`, `K ∈ R^{d_u×d_x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller(Matrix);

impl Controller {
    pub fn new(gain: Matrix) -> Result<Self> {
        if !linalg::is_finite(&gain) {
            return Err(invalid("controller gain has non-finite entries"));
        }
        Ok(Self(gain))
    }

    pub fn zeros(input_dim: usize, state_dim: usize) -> Self {
        Self(Matrix::zeros(input_dim, state_dim))
    }

    pub fn gain(&self) -> &Matrix {
        &self.0
    }

    pub fn into_gain(self) -> Matrix {
        self.0
    }

    pub fn input_dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.0.ncols()
    }

    /// `K + r·U`.
    pub fn perturbed(&self, radius: f64, direction: &Matrix) -> Self {
        Self(&self.0 + direction * radius)
    }

    pub fn distance(&self, other: &Controller) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

/// Where `Q` and `R` sit relative to the `0 ≺ Q, R ⪯ I` normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub q_max_eigenvalue: f64,
    pub r_max_eigenvalue: f64,
}

impl Normalization {
    pub fn is_normalized(&self) -> bool {
        self.q_max_eigenvalue <= 1.0 + 1e-12 && self.r_max_eigenvalue <= 1.0 + 1e-12
    }
}

/// The plant `x_{t+1} = A x_t + B u_t + w_t` with cost `xᵀQx + uᵀRu`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrSystem {
    a: Matrix,
    b: Matrix,
    q: Matrix,
    r: Matrix,
    noise: NoiseModel,
}

impl LqrSystem {
    pub fn new(a: Matrix, b: Matrix, q: Matrix, r: Matrix, noise: NoiseModel) -> Result<Self> {
        let dx = a.nrows();
        if dx == 0 || !a.is_square() {
            return Err(mismatch(format!("A must be square and non-empty, got {}x{}", a.nrows(), a.ncols())));
        }
        if b.nrows() != dx || b.ncols() == 0 {
            return Err(mismatch(format!("B must be {dx}x(d_u>0), got {}x{}", b.nrows(), b.ncols())));
        }
        let du = b.ncols();
        if q.shape() != (dx, dx) {
            return Err(mismatch(format!("Q must be {dx}x{dx}")));
        }
        if r.shape() != (du, du) {
            return Err(mismatch(format!("R must be {du}x{du}")));
        }
        if noise.dim() != dx {
            return Err(mismatch(format!("noise covariance must be {dx}x{dx}")));
        }
        for (name, m) in [("A", &a), ("B", &b), ("Q", &q), ("R", &r)] {
            if !linalg::is_finite(m) {
                return Err(invalid(format!("{name} has non-finite entries")));
            }
        }
        for (name, m) in [("Q", &q), ("R", &r)] {
            if !linalg::is_symmetric(m, 1e-10) {
                return Err(invalid(format!("{name} must be symmetric")));
            }
            let lmin = linalg::min_eigenvalue(m);
            if !(lmin > 0.0) {
                return Err(invalid(format!("{name} must be positive definite (λ_min = {lmin})")));
            }
        }
        Ok(Self { a, b, q, r, noise })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Result<Self> {
        if noise.dim() != self.state_dim() {
            return Err(mismatch("noise dimension differs from the state dimension"));
        }
        self.noise = noise;
        Ok(self)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// `A + BK`.
    pub fn closed_loop(&self, k: &Controller) -> Matrix {
        &self.a + &self.b * k.gain()
    }

    pub fn check_controller(&self, k: &Controller) -> Result<()> {
        if k.gain().shape() != (self.input_dim(), self.state_dim()) {
            return Err(mismatch(format!(
                "controller must be {}x{}, got {}x{}",
                self.input_dim(),
                self.state_dim(),
                k.input_dim(),
                k.state_dim()
            )));
        }
        Ok(())
    }

    pub fn normalization(&self) -> Normalization {
        Normalization {
            q_max_eigenvalue: linalg::max_eigenvalue(&self.q),
            r_max_eigenvalue: linalg::max_eigenvalue(&self.r),
        }
    }

    /// Largest `α₀` with `‖Q⁻¹‖, ‖R⁻¹‖ ≤ 1/α₀`.
    pub fn alpha0(&self) -> f64 {
        linalg::min_eigenvalue(&self.q).min(linalg::min_eigenvalue(&self.r))
    }

    /// `max(1, ‖B‖₂)` rounded up at the 4th decimal.
    pub fn psi(&self) -> f64 {
        linalg::ceil_4dp(linalg::spectral_norm(&self.b)).max(1.0)
    }
}

//! Sphere sampling and the one-point gradient estimator.
//!
//! For `f_r(x) = E_B[f(x + rB)]` with `B` uniform in the unit ball, the
//! gradient satisfies `∇f_r(x) = (d/r)·E_U[f(x + rU)·U]` with `U` uniform on
//! the unit sphere. Averaging `m` such terms gives the estimator used by the
//! learner.

use alloc::vec::Vec;

#[allow(unused_imports)] // unused whenever std is linked in
use num_traits::Float;

use rand_core::RngCore;

use crate::error::{invalid, mismatch, Result};
use crate::linalg::Matrix;
use crate::rng::{fill_normal, uniform};

/// A `d_u × d_x` matrix with unit Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereDirection(Matrix);

impl SphereDirection {
    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn negated(&self) -> Self {
        Self(-&self.0)
    }
}

/// Uniform draw from the Frobenius unit sphere of `rows × cols` matrices:
/// i.i.d. standard normal entries, normalized.
///
/// # Panics
///
/// If `rows * cols == 0`.
pub fn sample_sphere<R: RngCore + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> SphereDirection {
    assert!(rows * cols > 0, "sphere dimension must be positive");
    let mut m = Matrix::zeros(rows, cols);
    loop {
        fill_normal(rng, m.as_mut_slice());
        let norm = m.norm();
        if norm > 0.0 {
            m /= norm;
            return SphereDirection(m);
        }
    }
}

/// Uniform draw from the unit ball in `R^dim`: a sphere point scaled by `u^{1/dim}`.
pub fn sample_ball<R: RngCore + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let dir = sample_sphere(dim, 1, rng).into_matrix();
    let scale = uniform(rng).powf(1.0 / dim as f64);
    dir.iter().map(|v| v * scale).collect()
}

/// Streaming form of the one-point estimator; keeps `Σ cᵢUᵢ` only.
#[derive(Debug, Clone)]
pub struct OnePointAccumulator {
    sum: Matrix,
    count: usize,
}

impl OnePointAccumulator {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { sum: Matrix::zeros(rows, cols), count: 0 }
    }

    pub fn push(&mut self, cost: f64, direction: &SphereDirection) {
        for (s, u) in self.sum.iter_mut().zip(direction.as_matrix().iter()) {
            *s += cost * u;
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `(d_x·d_u / (m·r)) Σ cᵢUᵢ`; `None` when nothing was pushed.
    pub fn estimate(&self, radius: f64) -> Option<Matrix> {
        if self.count == 0 {
            return None;
        }
        let d = (self.sum.nrows() * self.sum.ncols()) as f64;
        Some(&self.sum * (d / (self.count as f64 * radius)))
    }
}

/// `(d_x·d_u / (m·r)) Σᵢ costs[i]·dirs[i]`.
pub fn one_point_estimate(costs: &[f64], dirs: &[SphereDirection], radius: f64) -> Result<Matrix> {
    if costs.len() != dirs.len() {
        return Err(mismatch("costs and directions must have equal length"));
    }
    if costs.is_empty() {
        return Err(invalid("at least one sample is required"));
    }
    if !(radius > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    let (rows, cols) = dirs[0].as_matrix().shape();
    let mut acc = OnePointAccumulator::new(rows, cols);
    for (c, u) in costs.iter().zip(dirs) {
        if u.as_matrix().shape() != (rows, cols) {
            return Err(mismatch("directions must share one shape"));
        }
        acc.push(*c, u);
    }
    Ok(acc.estimate(radius).expect("non-empty"))
}

/// Monte-Carlo estimate of `f_r(x) = E_B[f(x + rB)]`, `B` uniform in the unit ball.
pub fn smoothed_value<F, R>(f: F, x: &[f64], radius: f64, samples: usize, rng: &mut R) -> f64
where
    F: Fn(&[f64]) -> f64,
    R: RngCore + ?Sized,
{
    assert!(radius > 0.0 && samples > 0);
    let mut point = x.to_vec();
    let mut total = 0.0;
    for _ in 0..samples {
        let b = sample_ball(x.len(), rng);
        for ((p, xi), bi) in point.iter_mut().zip(x).zip(&b) {
            *p = xi + radius * bi;
        }
        total += f(&point);
    }
    total / samples as f64
}

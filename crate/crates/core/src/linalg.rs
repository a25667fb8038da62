//! Small dense linear-algebra helpers on top of nalgebra.

#[allow(unused_imports)] // unused whenever std is linked in
use num_traits::Float;

use nalgebra::{DMatrix, DVector};
pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Largest eigenvalue modulus, from the real Schur form.
///
/// Returns `+inf` for matrices with non-finite entries.
pub fn spectral_radius(m: &Matrix) -> f64 {
    if !is_finite(m) {
        return f64::INFINITY;
    }
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re.hypot(z.im))
        .fold(0.0, f64::max)
}

/// Operator 2-norm, `sqrt(λ_max(MᵀM))`.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if !is_finite(m) {
        return f64::INFINITY;
    }
    let gram = m.transpose() * m;
    max_eigenvalue(&gram).max(0.0).sqrt()
}

pub fn min_eigenvalue(sym: &Matrix) -> f64 {
    sym.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_eigenvalue(sym: &Matrix) -> f64 {
    sym.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `tr(AB)` without forming the product.
pub fn trace_product(a: &Matrix, b: &Matrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn is_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Max-abs asymmetry relative to the largest entry.
pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() <= tol * scale
}

/// Rounds up at the 4th decimal place.
pub fn ceil_4dp(x: f64) -> f64 {
    (x * 1e4).ceil() / 1e4
}

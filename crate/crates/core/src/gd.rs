//! Gradient descent with a corrupted first-order oracle.
//!
//! The update is `x_{t+1} = x_t − η·g_t` where `‖g_t − ∇f(x_t)‖ ≤ ε_t`. For a
//! `μ`-PL, locally `β`-smooth and `G`-Lipschitz objective and
//! `η ≤ min(1/β, 4/μ, D₀/2G)`, the gap obeys
//!
//! ```text
//! f(x_t) − f* ≤ max{ 4ε̄²_{t−1}/μ , (1 − μη/3)^t (f(x₀) − f*) }
//! ```
//!
//! with `ε̄²_t = max_{s≤t} ε_s²·ρ^{t−s}` and `ρ = 1 − μη/3`.

use alloc::vec::Vec;

#[allow(unused_imports)] // unused whenever std is linked in
use num_traits::Float;

use crate::error::{invalid, Error, Result};

/// O(1) tracker of `ε̄²_t` via `ε̄²_t = max(ε_t², ρ·ε̄²_{t−1})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCorruption {
    rho: f64,
    current: f64,
}

impl EffectiveCorruption {
    pub fn new(rho: f64) -> Self {
        Self { rho, current: 0.0 }
    }

    pub fn push(&mut self, eps: f64) -> f64 {
        self.current = (eps * eps).max(self.rho * self.current);
        self.current
    }

    pub fn value(&self) -> f64 {
        self.current
    }
}

/// Per-step corruption magnitudes and their effective (decayed running max) squares.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionSpec {
    eps: Vec<f64>,
    rho: f64,
    eps_bar_sq: Vec<f64>,
}

impl CorruptionSpec {
    pub fn new(eps: Vec<f64>, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(invalid("decay factor must lie in (0, 1)"));
        }
        if eps.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(invalid("corruption magnitudes must be finite and non-negative"));
        }
        let mut tracker = EffectiveCorruption::new(rho);
        let eps_bar_sq = eps.iter().map(|e| tracker.push(*e)).collect();
        Ok(Self { eps, rho, eps_bar_sq })
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eps_bar_sq(&self) -> &[f64] {
        &self.eps_bar_sq
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// `ε̄²_{t−1}`, zero for `t = 0`.
    pub fn effective_before(&self, t: usize) -> f64 {
        match t {
            0 => 0.0,
            _ => self.eps_bar_sq[t - 1],
        }
    }

    /// Whether every `ε_t ≤ min(G, sqrt((f̄ − f*)μ)/2)`.
    pub fn within_contract(&self, lipschitz: f64, f_bar: f64, f_star: f64, mu: f64) -> bool {
        let cap = lipschitz.min(((f_bar - f_star) * mu).sqrt() / 2.0);
        self.eps.iter().all(|e| *e <= cap)
    }
}

/// `η ≤ min(1/β, 4/μ, D₀/(2G))`.
pub fn step_size_admissible(eta: f64, smoothness: f64, pl: f64, d0: f64, lipschitz: f64) -> bool {
    eta > 0.0 && eta <= (1.0 / smoothness).min(4.0 / pl).min(d0 / (2.0 * lipschitz))
}

/// What the run needs to evaluate the convergence bound and the sub-level guard.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTracking {
    pub pl: f64,
    pub f_star: f64,
    /// Sub-level threshold `f̄`; exceeding it aborts the run.
    pub f_bar: Option<f64>,
    pub corruption: CorruptionSpec,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GdReport {
    /// `x_0, …, x_T`.
    pub iterates: Vec<Vec<f64>>,
    /// `f(x_t)`; empty without a probe.
    pub values: Vec<f64>,
    /// The convergence bound on `f(x_t) − f*`; empty without a probe and tracking.
    pub bound: Vec<f64>,
}

/// Gaps below this fraction of `max(1, |f*|, f(x₀) − f*)` are roundoff, not signal.
///
/// Once the iterate is that close to the minimum, `f(x_t) − f*` stops
/// shrinking in floating point while the bound keeps decaying geometrically.
pub const ROUNDOFF_SLACK: f64 = 1e-12;

impl GdReport {
    /// Steps where `values[t] − f* > bound[t]`, up to [`ROUNDOFF_SLACK`].
    pub fn violations(&self, f_star: f64) -> Vec<usize> {
        let scale = self.values.first().map_or(1.0, |v0| (v0 - f_star).abs()).max(f_star.abs()).max(1.0);
        self.values
            .iter()
            .zip(&self.bound)
            .enumerate()
            .filter(|(_, (v, b))| **v - f_star > **b + ROUNDOFF_SLACK * scale)
            .map(|(t, _)| t)
            .collect()
    }
}

/// Runs `steps` corrupted gradient steps from `x0`.
///
/// The optimizer itself only queries `oracle(t, x_t)`. `probe` is telemetry:
/// when present, `f(x_t)` is recorded and, with `tracking`, so is the bound.
pub fn corrupted_gd<G, F>(
    mut oracle: G,
    probe: Option<F>,
    x0: &[f64],
    eta: f64,
    steps: usize,
    tracking: Option<&BoundTracking>,
) -> Result<GdReport>
where
    G: FnMut(usize, &[f64]) -> Vec<f64>,
    F: Fn(&[f64]) -> f64,
{
    if !(eta > 0.0) {
        return Err(invalid("step size must be positive"));
    }
    if let Some(tr) = tracking {
        if tr.corruption.len() < steps {
            return Err(invalid("corruption schedule is shorter than the run"));
        }
        let rho = 1.0 - tr.pl * eta / 3.0;
        if (tr.corruption.rho() - rho).abs() > 1e-12 {
            return Err(invalid("corruption decay must equal 1 − μη/3"));
        }
    }
    let mut report = GdReport::default();
    let mut x = x0.to_vec();
    let mut gap0 = None;
    for t in 0..=steps {
        if let Some(f) = probe.as_ref() {
            let value = f(&x);
            if let Some(tr) = tracking {
                if tr.f_bar.is_some_and(|f_bar| !(value <= f_bar)) {
                    return Err(Error::DivergenceDetected { step: t, value });
                }
                let gap0 = *gap0.get_or_insert(value - tr.f_star);
                let rho = 1.0 - tr.pl * eta / 3.0;
                let floor = 4.0 * tr.corruption.effective_before(t) / tr.pl;
                report.bound.push(floor.max(rho.powi(t as i32) * gap0));
            }
            report.values.push(value);
        }
        report.iterates.push(x.clone());
        if t == steps {
            break;
        }
        let g = oracle(t, &x);
        if g.len() != x.len() {
            return Err(crate::error::mismatch("oracle returned a gradient of the wrong length"));
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= eta * gi;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn exact_gradients_contract_geometrically() {
        let mu_curv = 0.5;
        let f = |x: &[f64]| 0.5 * mu_curv * x[0] * x[0];
        // PL constant of ½μx² is 2μ; smoothness μ
        let (pl, beta) = (2.0 * mu_curv, mu_curv);
        let eta = 1.0 / beta;
        let tracking = BoundTracking {
            pl,
            f_star: 0.0,
            f_bar: Some(f(&[3.0])),
            corruption: CorruptionSpec::new(vec![0.0; 200], 1.0 - pl * eta / 3.0).unwrap(),
        };
        let rep = corrupted_gd(|_, x| vec![mu_curv * x[0]], Some(f), &[3.0], eta, 200, Some(&tracking)).unwrap();
        let rho = 1.0 - pl * eta / 3.0;
        for (t, v) in rep.values.iter().enumerate() {
            assert!(*v <= rho.powi(t as i32) * rep.values[0]);
        }
        assert!(rep.violations(0.0).is_empty());
    }

    #[test]
    fn starting_at_optimum_stays_below_floor() {
        let f = |x: &[f64]| 0.5 * x[0] * x[0];
        let (pl, eta) = (2.0, 0.5);
        let rho = 1.0 - pl * eta / 3.0;
        let eps = 0.05;
        let tracking = BoundTracking {
            pl,
            f_star: 0.0,
            f_bar: Some(1.0),
            corruption: CorruptionSpec::new(vec![eps; 500], rho).unwrap(),
        };
        let oracle = |t: usize, x: &[f64]| vec![x[0] + if t % 3 == 0 { eps } else { -eps }];
        let rep = corrupted_gd(oracle, Some(f), &[0.0], eta, 500, Some(&tracking)).unwrap();
        for v in &rep.values {
            assert!(*v <= 4.0 * eps * eps / pl);
        }
        assert!(rep.violations(0.0).is_empty());
    }

    #[test]
    fn adversarial_corruption_matches_single_step_recursion() {
        let f = |x: &[f64]| 0.5 * x[0] * x[0];
        let (pl, eta, eps) = (2.0, 0.5, 0.1);
        let rho = 1.0 - pl * eta / 3.0;
        // error opposes the gradient
        let oracle = |_: usize, x: &[f64]| vec![x[0] - eps * x[0].signum()];
        let tracking = BoundTracking {
            pl,
            f_star: 0.0,
            f_bar: Some(f(&[2.0])),
            corruption: CorruptionSpec::new(vec![eps; 1000], rho).unwrap(),
        };
        let rep = corrupted_gd(oracle, Some(f), &[2.0], eta, 1000, Some(&tracking)).unwrap();
        // per-step recursion: gap_{t+1} ≤ max(4ε²/μ, ρ·gap_t)
        for w in rep.values.windows(2) {
            assert!(w[1] <= (4.0 * eps * eps / pl).max(rho * w[0]));
        }
        assert!(*rep.values.last().unwrap() <= 4.0 * eps * eps / pl);
        assert!(rep.violations(0.0).is_empty());
    }

    #[test]
    fn divergence_is_detected() {
        let f = |x: &[f64]| x[0] * x[0];
        let tracking = BoundTracking {
            pl: 2.0,
            f_star: 0.0,
            f_bar: Some(1.5),
            corruption: CorruptionSpec::new(vec![0.0; 10], 1.0 - 2.0 * 1.5 / 3.0 + 1e-9).unwrap(),
        };
        let res = corrupted_gd(|_, x| vec![2.0 * x[0]], Some(f), &[1.0], 1.5 - 3e-9 / 2.0, 10, Some(&tracking));
        assert!(matches!(res, Err(Error::DivergenceDetected { step: 1, .. })), "{res:?}");
    }

    #[test]
    fn decaying_corruption_is_its_own_effective_value() {
        let rho: f64 = 0.9;
        let eps: Vec<f64> = (0..100).map(|t| 0.3 * rho.powf(t as f64 / 2.0)).collect();
        let spec = CorruptionSpec::new(eps.clone(), rho).unwrap();
        for (e, bar) in eps.iter().zip(spec.eps_bar_sq()) {
            assert!((e * e - bar).abs() <= 1e-15);
        }
    }

    #[test]
    fn step_size_precondition() {
        assert!(step_size_admissible(0.01, 10.0, 1.0, 1.0, 5.0));
        assert!(!step_size_admissible(0.2, 10.0, 1.0, 1.0, 5.0));
        assert!(!step_size_admissible(0.05, 10.0, 1.0, 0.1, 5.0));
    }

    proptest! {
        #[test]
        fn recurrence_equals_decayed_running_max(
            eps in proptest::collection::vec(0.0f64..2.0, 1..60),
            rho in 0.05f64..0.999,
        ) {
            let spec = CorruptionSpec::new(eps.clone(), rho).unwrap();
            for t in 0..eps.len() {
                let direct = (0..=t)
                    .map(|s| eps[s] * eps[s] * rho.powi((t - s) as i32))
                    .fold(0.0, f64::max);
                prop_assert!((direct - spec.eps_bar_sq()[t]).abs() <= 1e-12 * direct.max(1.0));
                if t > 0 {
                    prop_assert!(spec.eps_bar_sq()[t] >= rho * spec.eps_bar_sq()[t - 1]);
                }
            }
        }
    }

    #[test]
    fn violations_ignore_roundoff_but_not_real_excess() {
        let rep = GdReport { iterates: vec![], values: vec![2.0, 1e-30, 0.5], bound: vec![2.0, 1e-90, 0.25] };
        assert_eq!(rep.violations(0.0), vec![2]);
    }
}

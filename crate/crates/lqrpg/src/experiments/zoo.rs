use std::sync::Arc;

use lqrpg_core::gd::{corrupted_gd, step_size_admissible, BoundTracking, CorruptionSpec};
use lqrpg_core::lqr::{exact_policy_gradient, infinite_horizon_cost, solve_optimal, LqrSystem, RegularityConstants, SolverOptions};
use lqrpg_core::rng::{derive_seed, fill_normal, SeedStreams};
use lqrpg_core::linalg::Vector;
use lqrpg_core::{Controller, Matrix};

use super::{par_map, Result};
use crate::benchmarks::Benchmark;

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A test objective with known regularity constants on its sub-level set `{f ≤ f̄}`.
#[derive(Clone)]
pub struct Objective {
    pub name: &'static str,
    pub f: ValueFn,
    pub grad: GradFn,
    pub f_star: f64,
    pub pl: f64,
    pub smoothness: f64,
    pub lipschitz: f64,
    pub d0: f64,
    pub f_bar: f64,
    pub x0: Vec<f64>,
}

impl std::fmt::Debug for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Objective").field("name", &self.name).field("pl", &self.pl).finish_non_exhaustive()
    }
}

impl Objective {
    /// Largest admissible step, `min(1/β, 4/μ, D₀/2G)`.
    pub fn step_size(&self) -> f64 {
        (1.0 / self.smoothness).min(4.0 / self.pl).min(self.d0 / (2.0 * self.lipschitz))
    }

    /// `min(G, sqrt((f̄ − f*)μ)/2)`.
    pub fn corruption_cap(&self) -> f64 {
        self.lipschitz.min(((self.f_bar - self.f_star) * self.pl).sqrt() / 2.0)
    }
}

fn vector(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

/// `½ xᵀHx` for symmetric positive semi-definite `H` whose smallest non-zero
/// eigenvalue is `lambda_min`; the PL constant is `2·lambda_min`.
///
/// The sub-level threshold is `2·f(x₀)`, and on its `D₀ = 1` neighbourhood
/// `‖Hx‖ ≤ sqrt(2λ_max f̄) + λ_max`.
fn quadratic(name: &'static str, h: Matrix, lambda_min: f64, x0: Vec<f64>) -> Objective {
    let lambda_max = h.clone().symmetric_eigenvalues().max();
    let f_bar = (&h * vector(&x0)).dot(&vector(&x0));
    let (hf, hg) = (h.clone(), h);
    Objective {
        name,
        f: Arc::new(move |x| 0.5 * (&hf * vector(x)).dot(&vector(x))),
        grad: Arc::new(move |x| (&hg * vector(x)).as_slice().to_vec()),
        f_star: 0.0,
        pl: 2.0 * lambda_min,
        smoothness: lambda_max,
        lipschitz: (2.0 * lambda_max * f_bar).sqrt() + lambda_max,
        d0: 1.0,
        f_bar,
        x0,
    }
}

/// The fixed zoo of PL objectives.
pub fn zoo() -> Vec<Objective> {
    let mut out = vec![
        quadratic("quadratic_1d", Matrix::from_element(1, 1, 2.0), 2.0, vec![3.0]),
        quadratic("ill_conditioned_2d", Matrix::from_diagonal(&vector(&[1.0, 10.0])), 1.0, vec![2.0, -1.0]),
    ];

    let mut rng = SeedStreams::new(derive_seed(0x200, &[5])).aux(0);
    let mut g = vec![0.0; 25];
    fill_normal(&mut rng, &mut g);
    let (q, _) = Matrix::from_column_slice(5, 5, &g).qr().unpack();
    let eig = [0.5, 1.0, 1.7, 2.5, 4.0];
    let h = &q * Matrix::from_diagonal(&vector(&eig)) * q.transpose();
    let h = (&h + h.transpose()) * 0.5;
    out.push(quadratic("random_spd_5d", h, 0.5, vec![1.0, -1.0, 0.5, 2.0, -0.5]));

    // ½(x + y)²: minimisers form a line, PL without strong convexity
    out.push(quadratic("rank_deficient_2d", Matrix::from_element(2, 2, 1.0), 2.0, vec![1.5, 0.5]));

    // ½‖Ax − b‖² with wide A; AAᵀ has eigenvalues 1 and 4
    let a = Matrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
    let b = [1.0, -2.0];
    let (af, ag) = (a.clone(), a);
    out.push(Objective {
        name: "least_squares_2x4",
        f: Arc::new(move |x| {
            let r = &af * vector(x) - vector(&b);
            0.5 * r.norm_squared()
        }),
        grad: Arc::new(move |x| {
            let r = &ag * vector(x) - vector(&b);
            (ag.transpose() * r).as_slice().to_vec()
        }),
        f_star: 0.0,
        pl: 2.0,
        smoothness: 4.0,
        lipschitz: 64f64.sqrt() + 4.0,
        d0: 1.0,
        f_bar: 8.0,
        x0: vec![-1.0, 0.0, 3.0, 1.0],
    });

    // x² + 3 sin²x: non-convex, f'' ∈ [−4, 8], PL with μ = 1/32
    let f_bar = 10.0f64;
    out.push(Objective {
        name: "nonconvex_sine",
        f: Arc::new(|x| x[0] * x[0] + 3.0 * x[0].sin().powi(2)),
        grad: Arc::new(|x| vec![2.0 * x[0] + 3.0 * (2.0 * x[0]).sin()]),
        f_star: 0.0,
        pl: 1.0 / 32.0,
        smoothness: 8.0,
        lipschitz: 2.0 * (f_bar.sqrt() + 1.0) + 3.0,
        d0: 1.0,
        f_bar,
        x0: vec![2.5],
    });

    // log cosh x on {f ≤ 1}; PL constant is the smallest tanh²x / log cosh x there
    let f_bar = 1.0f64;
    let edge = f_bar.exp().acosh();
    out.push(Objective {
        name: "log_cosh",
        f: Arc::new(|x| x[0].cosh().ln()),
        grad: Arc::new(|x| vec![x[0].tanh()]),
        f_star: 0.0,
        pl: edge.tanh().powi(2) / f_bar,
        smoothness: 1.0,
        lipschitz: 1.0,
        d0: 1.0,
        f_bar,
        x0: vec![1.2],
    });

    out.push(lqr_scalar());
    out
}

/// `J(k)` of the scalar benchmark with its regularity constants.
fn lqr_scalar() -> Objective {
    let sys: LqrSystem = Benchmark::Scalar.config().system(10_000).expect("benchmark is valid");
    let k0 = Controller::zeros(1, 1);
    let c = RegularityConstants::for_system(&sys, &k0).expect("benchmark is admissible");
    let (_, j_star) = solve_optimal(&sys, SolverOptions::default()).expect("benchmark is solvable");
    let (sf, sg) = (sys.clone(), sys);
    Objective {
        name: "lqr_scalar",
        f: Arc::new(move |x| infinite_horizon_cost(&sf, &Controller::new(Matrix::from_element(1, 1, x[0])).unwrap())),
        grad: Arc::new(move |x| {
            let k = Controller::new(Matrix::from_element(1, 1, x[0])).unwrap();
            exact_policy_gradient(&sg, &k).map_or(vec![f64::NAN], |g| vec![g[(0, 0)]])
        }),
        f_star: j_star,
        pl: c.pl,
        smoothness: c.smoothness,
        lipschitz: c.lipschitz,
        d0: c.d0,
        f_bar: c.nu,
        x0: vec![0.0],
    }
}

/// How the oracle error `g_t − ∇f(x_t)` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Zero,
    /// Fixed direction, magnitude just under the cap.
    Constant,
    /// Magnitude `ε₀ρ^{t/2}`.
    Decaying,
    /// Opposes the true gradient, flipping its sign once it is small.
    Adversarial,
    /// Adversarial at three times the cap; outside the theorem's contract.
    Oversized,
}

impl Pattern {
    pub const ALL: [Pattern; 5] = [Pattern::Zero, Pattern::Constant, Pattern::Decaying, Pattern::Adversarial, Pattern::Oversized];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Zero => "zero",
            Pattern::Constant => "constant",
            Pattern::Decaying => "decaying",
            Pattern::Adversarial => "adversarial",
            Pattern::Oversized => "oversized",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdCase {
    pub objective: &'static str,
    pub pattern: Pattern,
    pub steps: usize,
    pub eta: f64,
    pub in_contract: bool,
    /// Steps where the bound failed.
    pub violations: Vec<usize>,
    /// Largest `(f(x_t) − f*) / bound_t`.
    pub worst_ratio: f64,
    pub final_gap: f64,
    /// Step at which the iterate left `{f ≤ f̄}`, if it did.
    pub escaped_at: Option<usize>,
}

impl GdCase {
    pub fn passed(&self) -> bool {
        !self.in_contract || (self.violations.is_empty() && self.escaped_at.is_none())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdSuite {
    pub cases: Vec<GdCase>,
}

impl GdSuite {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(GdCase::passed)
    }

    pub fn violations(&self) -> usize {
        self.cases.iter().filter(|c| c.in_contract).map(|c| c.violations.len()).sum()
    }
}

fn magnitudes(pattern: Pattern, cap: f64, rho: f64, steps: usize) -> Vec<f64> {
    let eps0 = 0.9 * cap;
    (0..steps)
        .map(|t| match pattern {
            Pattern::Zero => 0.0,
            Pattern::Constant | Pattern::Adversarial => eps0,
            Pattern::Decaying => eps0 * rho.powf(t as f64 / 2.0),
            Pattern::Oversized => 3.0 * cap,
        })
        .collect()
}

fn run_case(obj: &Objective, pattern: Pattern, steps: usize, seed: u64) -> Result<GdCase> {
    let eta = obj.step_size();
    debug_assert!(step_size_admissible(eta, obj.smoothness, obj.pl, obj.d0, obj.lipschitz));
    let rho = 1.0 - obj.pl * eta / 3.0;
    let eps = magnitudes(pattern, obj.corruption_cap(), rho, steps);
    let corruption = CorruptionSpec::new(eps.clone(), rho)?;
    let in_contract = corruption.within_contract(obj.lipschitz, obj.f_bar, obj.f_star, obj.pl);

    let dim = obj.x0.len();
    let mut direction = vec![0.0; dim];
    fill_normal(&mut SeedStreams::new(derive_seed(seed, &[dim as u64])).aux(0), &mut direction);
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    direction.iter_mut().for_each(|v| *v /= norm);

    let grad = obj.grad.clone();
    let oracle = |t: usize, x: &[f64]| -> Vec<f64> {
        let g = grad(x);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        match pattern {
            Pattern::Zero => g,
            Pattern::Constant | Pattern::Decaying => g.iter().zip(&direction).map(|(gi, d)| gi + eps[t] * d).collect(),
            Pattern::Adversarial | Pattern::Oversized => {
                let unit: Vec<f64> = if gn > 0.0 { g.iter().map(|v| v / gn).collect() } else { direction.clone() };
                g.iter().zip(&unit).map(|(gi, u)| gi - eps[t] * u).collect()
            }
        }
    };
    let tracking = BoundTracking { pl: obj.pl, f_star: obj.f_star, f_bar: Some(obj.f_bar), corruption };
    let f = obj.f.clone();
    let probe = move |x: &[f64]| f(x);
    let report = corrupted_gd(oracle, Some(probe), &obj.x0, eta, steps, Some(&tracking));
    let (violations, worst_ratio, final_gap, escaped_at) = match report {
        Ok(r) => {
            let worst = r
                .values
                .iter()
                .zip(&r.bound)
                .map(|(v, b)| if *b > 0.0 { (v - obj.f_star) / b } else if v - obj.f_star > 0.0 { f64::INFINITY } else { 0.0 })
                .fold(0.0, f64::max);
            (r.violations(obj.f_star), worst, r.values.last().map_or(f64::NAN, |v| v - obj.f_star), None)
        }
        Err(lqrpg_core::Error::DivergenceDetected { step, .. }) => (Vec::new(), f64::NAN, f64::NAN, Some(step)),
        Err(e) => return Err(e.into()),
    };
    Ok(GdCase { objective: obj.name, pattern, steps, eta, in_contract, violations, worst_ratio, final_gap, escaped_at })
}

/// Every zoo objective under every corruption pattern for `steps` steps.
pub fn corrupted_gd_bound_suite(steps: usize, seed: u64) -> Result<GdSuite> {
    let grid: Vec<(Objective, Pattern)> =
        zoo().into_iter().flat_map(|o| Pattern::ALL.into_iter().map(move |p| (o.clone(), p))).collect();
    let cases = par_map(grid, |(o, p)| run_case(&o, p, steps, seed)).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(GdSuite { cases })
}

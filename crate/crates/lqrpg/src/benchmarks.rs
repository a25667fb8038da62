//! The three fixed benchmark plants and the desk-scale schedule preset.

use lqrpg_core::lqr::random_stable_system;
use lqrpg_core::rng::SeedStreams;
use lqrpg_core::{Controller, Matrix, NoiseKind};

use crate::config::{DeskPreset, NoiseSpec, SystemConfig, DEFAULT_DELTA};

/// Seed that generated the random 3×2 benchmark. Changing it changes the benchmark.
pub const RANDOM_3X2_SEED: u64 = 20_190_613;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    /// `a = 0.5, b = 1, q = r = 1, Σ_w = 1`.
    Scalar,
    /// Lightly damped 2×1 plant with `ρ(A) = 0.98`.
    TwoByOne,
    /// Random 3×2 plant with `ρ(A) = 0.9`, frozen by [`RANDOM_3X2_SEED`].
    Random3x2,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Scalar, Benchmark::TwoByOne, Benchmark::Random3x2];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Scalar => "scalar",
            Benchmark::TwoByOne => "two_by_one",
            Benchmark::Random3x2 => "random_3x2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn config(self) -> SystemConfig {
        let gaussian = |covariance: Matrix| NoiseSpec {
            kind: NoiseKind::TruncatedGaussian,
            covariance,
            sigma_sq: None,
            bound_w: None,
            truncation_radius: None,
            horizon: None,
        };
        match self {
            Benchmark::Scalar => SystemConfig {
                a: Matrix::from_element(1, 1, 0.5),
                b: Matrix::from_element(1, 1, 1.0),
                q: Matrix::identity(1, 1),
                r: Matrix::identity(1, 1),
                noise: gaussian(Matrix::identity(1, 1)),
                k0: Controller::zeros(1, 1),
                nu: None,
                delta: DEFAULT_DELTA,
                desk: Some(SCALAR_DESK),
            },
            Benchmark::TwoByOne => SystemConfig {
                a: Matrix::from_row_slice(2, 2, &[0.98, 0.1, 0.0, 0.9]),
                b: Matrix::from_row_slice(2, 1, &[0.0, 1.0]),
                q: Matrix::identity(2, 2),
                r: Matrix::identity(1, 1),
                noise: gaussian(Matrix::identity(2, 2)),
                k0: Controller::zeros(1, 2),
                nu: None,
                delta: DEFAULT_DELTA,
                desk: None,
            },
            Benchmark::Random3x2 => {
                let (sys, k0) = random_stable_system(3, 2, 0.9, &mut SeedStreams::new(RANDOM_3X2_SEED).aux(0));
                SystemConfig {
                    a: sys.a().clone(),
                    b: sys.b().clone(),
                    q: sys.q().clone(),
                    r: sys.r().clone(),
                    noise: gaussian(sys.noise().covariance().clone()),
                    k0,
                    nu: None,
                    delta: DEFAULT_DELTA,
                    desk: None,
                }
            }
        }
    }
}

/// Calibrated for the scalar benchmark. `r₀ = 0.1` is well above `D₀`, so the
/// preset lifts the radius clamp.
pub const SCALAR_DESK: DeskPreset =
    DeskPreset { eta: 0.02, r0: 0.1, m0: 400.0, tau: 3.0, reference_horizon: 16_000, unclamped_radius: true };

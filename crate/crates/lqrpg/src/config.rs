//! TOML system files.
//!
//! ```toml
//! [system]
//! A = [[0.5]]
//! B = [[1.0]]
//! Q = [[1.0]]
//! R = [[1.0]]
//!
//! [noise]
//! kind = "truncated_gaussian"   # or "bounded_iid", "disabled"
//! covariance = [[1.0]]
//! delta = 0.05
//!
//! [controller]
//! K0 = [[0.0]]
//! ```
//!
//! Optional keys: `noise.sigma_sq`, `noise.bound_W`, `noise.truncation_radius`,
//! `noise.horizon` and `constants.nu`. Without `[controller]` the initial
//! controller is zero, and without `constants.nu` the budget is `ν = 4·J(K₀)`.
//!
//! An optional `[schedule]` section pins desk-scale values of the learner's
//! schedule at a reference horizon (see [`DeskPreset`]):
//!
//! ```toml
//! [schedule]
//! eta = 0.02
//! r0 = 0.1
//! m0 = 400
//! tau = 3
//! reference_horizon = 16000
//! unclamped_radius = true
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lqrpg_core::lqr::RegularityConstants;
use lqrpg_core::online::{theorem1_schedule, Schedule, ScheduleOverrides};
use lqrpg_core::simulator::truncation_params;
use lqrpg_core::{Controller, LqrSystem, Matrix, NoiseKind, NoiseModel};
use serde::Deserialize;

/// Horizon used to size the noise truncation when nothing else says so.
pub const DEFAULT_HORIZON: u64 = 100_000;
pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid system: {0}")]
    Invalid(String),
}

impl From<lqrpg_core::Error> for ConfigError {
    fn from(e: lqrpg_core::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    system: RawSystem,
    noise: RawNoise,
    controller: Option<RawController>,
    constants: Option<RawConstants>,
    schedule: Option<RawSchedule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawSystem {
    A: Vec<Vec<f64>>,
    B: Vec<Vec<f64>>,
    Q: Vec<Vec<f64>>,
    R: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawNoise {
    kind: String,
    covariance: Option<Vec<Vec<f64>>>,
    sigma_sq: Option<f64>,
    bound_W: Option<f64>,
    truncation_radius: Option<f64>,
    delta: Option<f64>,
    horizon: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawController {
    K0: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    nu: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    eta: f64,
    r0: f64,
    m0: f64,
    tau: f64,
    reference_horizon: u64,
    #[serde(default)]
    unclamped_radius: bool,
}

/// Effective schedule values pinned at a reference horizon.
///
/// They are turned into multipliers once, so at other horizons `τ` and `m₀`
/// follow the theoretical horizon dependence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeskPreset {
    pub eta: f64,
    pub r0: f64,
    pub m0: f64,
    pub tau: f64,
    pub reference_horizon: u64,
    pub unclamped_radius: bool,
}

/// Noise as written in the file; the actual model may depend on the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub covariance: Matrix,
    pub sigma_sq: Option<f64>,
    pub bound_w: Option<f64>,
    pub truncation_radius: Option<f64>,
    pub horizon: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub a: Matrix,
    pub b: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub noise: NoiseSpec,
    pub k0: Controller,
    pub nu: Option<f64>,
    pub delta: f64,
    pub desk: Option<DeskPreset>,
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<Matrix, ConfigError> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(ConfigError::Invalid(format!("{name} must be a non-empty matrix")));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(ConfigError::Invalid(format!("{name} has rows of different lengths")));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn line_column(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl SystemConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_toml_str(&src)
    }

    pub fn from_toml_str(src: &str) -> Result<Self, ConfigError> {
        let raw: RawFile = toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_column(src, s.start));
            ConfigError::Parse { line, column, message: e.message().trim().to_owned() }
        })?;
        let kind = match raw.noise.kind.as_str() {
            "bounded_iid" => NoiseKind::BoundedIid,
            "truncated_gaussian" => NoiseKind::TruncatedGaussian,
            "disabled" => NoiseKind::Disabled,
            other => return Err(ConfigError::Invalid(format!("unknown noise kind `{other}`"))),
        };
        let a = matrix("A", &raw.system.A)?;
        let covariance = match (&raw.noise.covariance, kind) {
            (Some(c), _) => matrix("noise.covariance", c)?,
            (None, NoiseKind::Disabled) => Matrix::zeros(a.nrows(), a.nrows()),
            (None, _) => return Err(ConfigError::Invalid("noise.covariance is required".into())),
        };
        let b = matrix("B", &raw.system.B)?;
        let k0 = match raw.controller {
            Some(c) => Controller::new(matrix("K0", &c.K0)?)?,
            None => Controller::zeros(b.ncols(), a.nrows()),
        };
        let cfg = SystemConfig {
            a,
            b,
            q: matrix("Q", &raw.system.Q)?,
            r: matrix("R", &raw.system.R)?,
            noise: NoiseSpec {
                kind,
                covariance,
                sigma_sq: raw.noise.sigma_sq,
                bound_w: raw.noise.bound_W,
                truncation_radius: raw.noise.truncation_radius,
                horizon: raw.noise.horizon,
            },
            k0,
            nu: raw.constants.and_then(|c| c.nu),
            delta: raw.noise.delta.unwrap_or(DEFAULT_DELTA),
            desk: raw.schedule.map(|s| DeskPreset {
                eta: s.eta,
                r0: s.r0,
                m0: s.m0,
                tau: s.tau,
                reference_horizon: s.reference_horizon,
                unclamped_radius: s.unclamped_radius,
            }),
        };
        if let Some(d) = &cfg.desk {
            if [d.eta, d.r0, d.m0, d.tau].iter().any(|v| !(*v > 0.0) || !v.is_finite()) || d.reference_horizon == 0 {
                return Err(ConfigError::Invalid("schedule values must be positive".into()));
            }
        }
        // surface dimension and definiteness problems at load time
        let sys = cfg.system(cfg.default_horizon())?;
        sys.check_controller(&cfg.k0)?;
        Ok(cfg)
    }

    /// Horizon from the file, else [`DEFAULT_HORIZON`].
    pub fn default_horizon(&self) -> u64 {
        self.noise.horizon.unwrap_or(DEFAULT_HORIZON)
    }

    /// The plant for a run of `horizon` rounds.
    ///
    /// Truncated Gaussian noise without an explicit radius is truncated at
    /// `sqrt(5·d_x·log(T/δ))` and announces the matching `W` and `σ²`.
    pub fn system(&self, horizon: u64) -> Result<LqrSystem, ConfigError> {
        let spec = &self.noise;
        let mut noise = match spec.kind {
            NoiseKind::Disabled => NoiseModel::disabled(spec.covariance.nrows()),
            NoiseKind::BoundedIid => NoiseModel::bounded_iid(spec.covariance.clone())?,
            NoiseKind::TruncatedGaussian => match spec.truncation_radius {
                Some(radius) => NoiseModel::truncated_gaussian(spec.covariance.clone(), radius)?,
                None => truncation_params(&spec.covariance, horizon, self.delta)?.noise_model(spec.covariance.clone())?,
            },
        };
        if let Some(s) = spec.sigma_sq {
            noise = noise.with_sigma_sq(s)?;
        }
        if let Some(w) = spec.bound_w {
            noise = noise.with_bound(w)?;
        }
        Ok(LqrSystem::new(self.a.clone(), self.b.clone(), self.q.clone(), self.r.clone(), noise)?)
    }

    pub fn constants(&self, sys: &LqrSystem) -> lqrpg_core::Result<RegularityConstants> {
        match self.nu {
            Some(nu) => RegularityConstants::for_system_with_nu(sys, nu),
            None => RegularityConstants::for_system(sys, &self.k0),
        }
    }

    pub fn schedule(
        &self,
        sys: &LqrSystem,
        horizon: u64,
        overrides: ScheduleOverrides,
    ) -> lqrpg_core::Result<Schedule> {
        let consts = self.constants(sys)?;
        theorem1_schedule(&consts, horizon, self.delta, sys.input_dim(), sys.noise().bound_w(), overrides)
    }

    /// Overrides that reproduce `preset` at its reference horizon.
    pub fn preset_overrides(&self, preset: &DeskPreset) -> Result<ScheduleOverrides, ConfigError> {
        let sys = self.system(preset.reference_horizon)?;
        let theory = self.schedule(&sys, preset.reference_horizon, ScheduleOverrides::default())?.theoretical;
        let mut o = ScheduleOverrides::targeting(&theory, preset.eta, preset.r0, preset.m0, preset.tau);
        o.unclamped_radius = preset.unclamped_radius;
        Ok(o)
    }

    /// The file's `[schedule]` preset as overrides, or the faithful schedule without one.
    pub fn overrides(&self) -> Result<ScheduleOverrides, ConfigError> {
        match &self.desk {
            Some(p) => self.preset_overrides(p),
            None => Ok(ScheduleOverrides::default()),
        }
    }

    pub fn to_toml(&self) -> String {
        fn rows(m: &Matrix) -> String {
            let rows: Vec<String> = (0..m.nrows())
                .map(|i| {
                    let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
                    format!("[{}]", row.join(", "))
                })
                .collect();
            format!("[{}]", rows.join(", "))
        }
        let mut s = String::new();
        let _ = writeln!(s, "[system]");
        for (name, m) in [("A", &self.a), ("B", &self.b), ("Q", &self.q), ("R", &self.r)] {
            let _ = writeln!(s, "{name} = {}", rows(m));
        }
        let kind = match self.noise.kind {
            NoiseKind::BoundedIid => "bounded_iid",
            NoiseKind::TruncatedGaussian => "truncated_gaussian",
            NoiseKind::Disabled => "disabled",
        };
        let _ = writeln!(s, "\n[noise]\nkind = \"{kind}\"\ncovariance = {}", rows(&self.noise.covariance));
        let _ = writeln!(s, "delta = {:?}", self.delta);
        for (key, v) in [
            ("sigma_sq", self.noise.sigma_sq),
            ("bound_W", self.noise.bound_w),
            ("truncation_radius", self.noise.truncation_radius),
        ] {
            if let Some(v) = v {
                let _ = writeln!(s, "{key} = {v:?}");
            }
        }
        if let Some(h) = self.noise.horizon {
            let _ = writeln!(s, "horizon = {h}");
        }
        let _ = writeln!(s, "\n[controller]\nK0 = {}", rows(self.k0.gain()));
        if let Some(nu) = self.nu {
            let _ = writeln!(s, "\n[constants]\nnu = {nu:?}");
        }
        if let Some(d) = &self.desk {
            let _ = writeln!(
                s,
                "\n[schedule]\neta = {:?}\nr0 = {:?}\nm0 = {:?}\ntau = {:?}\nreference_horizon = {}\nunclamped_radius = {}",
                d.eta, d.r0, d.m0, d.tau, d.reference_horizon, d.unclamped_radius
            );
        }
        s
    }
}

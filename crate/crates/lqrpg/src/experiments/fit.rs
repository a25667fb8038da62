use lqrpg_core::rng::{derive_seed, uniform, SeedStreams};

use super::{ExperimentError, Result};

/// One abscissa of a scaling fit: the samples' mean and standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct FitPoint {
    pub x: f64,
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

/// Power law `mean ≈ 10^intercept · x^slope`, fitted by least squares on
/// `log10(mean)` against `log10(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Bootstrap standard error of the slope (resampling within each point).
    pub slope_se: f64,
    pub points: Vec<FitPoint>,
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// `(slope, intercept, R²)` of `y ≈ slope·x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, intercept, r_squared)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn log_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if points.iter().any(|(_, m)| !(*m > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|(x, _)| x.log10()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, m)| m.log10()).collect();
    Some(least_squares(&xs, &ys))
}

/// Fits a power law to `(x, samples)` groups. Needs at least two distinct
/// `x` and positive means.
pub fn fit_scaling(groups: &[(f64, Vec<f64>)], seed: u64) -> Result<ScalingFit> {
    if groups.len() < 2 {
        return Err(ExperimentError::Fit("need at least two points".into()));
    }
    if groups.iter().any(|(x, s)| s.is_empty() || !(*x > 0.0)) {
        return Err(ExperimentError::Fit("every point needs a positive abscissa and samples".into()));
    }
    let points: Vec<FitPoint> = groups
        .iter()
        .map(|(x, s)| {
            let m = mean(s);
            let var = if s.len() > 1 { s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64 } else { 0.0 };
            FitPoint { x: *x, mean: m, std_err: (var / s.len() as f64).sqrt(), samples: s.len() }
        })
        .collect();
    let means: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.mean)).collect();
    let (slope, intercept, r_squared) = log_fit(&means)
        .ok_or_else(|| ExperimentError::Fit(format!("non-positive mean among {means:?}")))?;

    let mut rng = SeedStreams::new(derive_seed(seed, &[0xB007])).aux(0);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let resampled: Vec<(f64, f64)> = groups
            .iter()
            .map(|(x, s)| {
                let total: f64 = (0..s.len()).map(|_| s[((uniform(&mut rng) * s.len() as f64) as usize).min(s.len() - 1)]).sum();
                (*x, total / s.len() as f64)
            })
            .collect();
        if let Some((b, _, _)) = log_fit(&resampled) {
            slopes.push(b);
        }
    }
    let slope_se = if slopes.len() > 1 {
        let m = mean(&slopes);
        (slopes.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (slopes.len() - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(ScalingFit { slope, intercept, r_squared, slope_se, points })
}

//! One-dimensional Gaussian kernel density estimation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    #[default]
    Silverman,
    Fixed(f64),
}

impl Bandwidth {
    pub fn resolve(self, samples: &[f64]) -> Result<f64> {
        match self {
            Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => Ok(h),
            Bandwidth::Fixed(h) => Err(Error::DegenerateBandwidth(format!(
                "bandwidth must be positive, got {h}"
            ))),
            Bandwidth::Silverman => silverman_bandwidth(samples),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub bandwidth: f64,
    pub points: Vec<f64>,
    pub densities: Vec<f64>,
}

impl DensityCurve {
    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.points, &self.densities)
    }
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`; when the IQR collapses to zero
/// the standard deviation alone is used.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples(format!(
            "bandwidth needs at least 2 samples, got {n}"
        )));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegenerateBandwidth("samples are constant".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

pub(crate) fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Gaussian KDE with bandwidth `h` evaluated at each grid point.
pub fn gaussian_kde(samples: &[f64], h: f64, grid: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * PI).sqrt());
    grid.iter()
        .map(|&g| {
            samples
                .iter()
                .map(|&s| {
                    let u = (g - s) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect()
}

/// Density curve over `[min - 3h, max + 3h]` with `grid` evenly spaced points.
pub fn kde_1d(samples: &[f64], bandwidth: Bandwidth, grid: usize) -> Result<DensityCurve> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(format!(
            "KDE needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if grid < 2 {
        return Err(Error::InvalidConfig(
            "KDE grid needs at least 2 points".into(),
        ));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite sample".into()));
    }
    let h = bandwidth.resolve(samples)?;
    let (lo, hi) = min_max(samples);
    let points = linspace(lo - 3.0 * h, hi + 3.0 * h, grid);
    let densities = gaussian_kde(samples, h, &points);
    Ok(DensityCurve {
        bandwidth: h,
        points,
        densities,
    })
}

pub(crate) fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

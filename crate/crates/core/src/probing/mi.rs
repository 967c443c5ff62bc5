//! Mutual information between a single neuron's activation and the binary
//! label, in bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kde::{gaussian_kde, linspace, min_max, trapezoid, Bandwidth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiEstimator {
    DiscreteBinned,
    Kde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    /// Clipped at zero.
    pub value_bits: f64,
    /// Before clipping.
    pub raw_bits: f64,
    /// Number of bins, or grid points for the KDE estimator.
    pub bins: usize,
    pub estimator: MiEstimator,
}

pub const KDE_GRID_POINTS: usize = 512;

/// `max(2, floor(sqrt(n)))`.
pub fn default_bins(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(2)
}

fn check_labels(y: &[u8], n: usize) -> Result<()> {
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {n} values",
            y.len()
        )));
    }
    if let Some((row, l)) = y.iter().enumerate().find(|(_, &l)| l > 1) {
        return Err(Error::UnknownLabel {
            row,
            label: l.to_string(),
        });
    }
    Ok(())
}

/// Equal-frequency bin index per value. A run of tied values shares the bin
/// of its first rank, so ties are never split.
pub fn equal_frequency_bins(z: &[f64], bins: usize) -> Vec<usize> {
    let n = z.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));
    let mut out = vec![0; n];
    let mut run_bin = 0;
    for (rank, &idx) in order.iter().enumerate() {
        if rank == 0 || z[idx] != z[order[rank - 1]] {
            run_bin = rank * bins / n;
        }
        out[idx] = run_bin;
    }
    out
}

/// Plug-in estimate over equal-frequency bins of `z` and the two label values.
pub fn mutual_information_discrete(z: &[f64], y: &[u8], bins: usize) -> Result<MiEstimate> {
    let n = z.len();
    check_labels(y, n)?;
    if bins < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    if n < bins {
        return Err(Error::TooFewSamples(format!("{n} samples for {bins} bins")));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite activation".into()));
    }
    let assigned = equal_frequency_bins(z, bins);
    let mut joint = vec![[0usize; 2]; bins];
    for (&b, &l) in assigned.iter().zip(y) {
        joint[b][l as usize] += 1;
    }
    let total = n as f64;
    let py = [0, 1].map(|l| joint.iter().map(|row| row[l]).sum::<usize>() as f64 / total);
    let mut mi = 0.0;
    for row in &joint {
        let pz = (row[0] + row[1]) as f64 / total;
        for l in 0..2 {
            if row[l] == 0 {
                continue;
            }
            let pzy = row[l] as f64 / total;
            mi += pzy * (pzy / (pz * py[l])).log2();
        }
    }
    Ok(MiEstimate {
        value_bits: mi.max(0.0),
        raw_bits: mi,
        bins,
        estimator: MiEstimator::DiscreteBinned,
    })
}

fn differential_entropy_bits(grid: &[f64], density: &[f64]) -> f64 {
    let integrand: Vec<f64> = density
        .iter()
        .map(|&p| if p > 0.0 { -p * p.log2() } else { 0.0 })
        .collect();
    trapezoid(grid, &integrand)
}

/// `H(z) - sum_y p(y) H(z | y)` with each entropy taken from a Gaussian KDE
/// on a shared 512-point grid. One bandwidth, resolved on the pooled sample,
/// is used for all three densities.
pub fn mutual_information_kde(z: &[f64], y: &[u8], bandwidth: Bandwidth) -> Result<MiEstimate> {
    let n = z.len();
    check_labels(y, n)?;
    if n < 8 {
        return Err(Error::TooFewSamples(format!(
            "KDE MI needs at least 8 samples, got {n}"
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite activation".into()));
    }
    let classes: [Vec<f64>; 2] = [0u8, 1].map(|l| {
        z.iter()
            .zip(y)
            .filter(|(_, &yl)| yl == l)
            .map(|(&v, _)| v)
            .collect()
    });
    if classes.iter().any(|c| c.is_empty()) {
        return Err(Error::SingleClass);
    }
    let (lo, hi) = min_max(z);
    if lo == hi {
        return Err(Error::DegenerateBandwidth("activation is constant".into()));
    }
    let h = bandwidth.resolve(z)?;
    let grid = linspace(lo - 3.0 * h, hi + 3.0 * h, KDE_GRID_POINTS);

    let marginal = differential_entropy_bits(&grid, &gaussian_kde(z, h, &grid));
    let conditional: f64 = classes
        .iter()
        .map(|c| {
            let weight = c.len() as f64 / n as f64;
            weight * differential_entropy_bits(&grid, &gaussian_kde(c, h, &grid))
        })
        .sum();
    let mi = marginal - conditional;
    Ok(MiEstimate {
        value_bits: mi.max(0.0),
        raw_bits: mi,
        bins: KDE_GRID_POINTS,
        estimator: MiEstimator::Kde,
    })
}

//! Seeded activation data with planted latent subgroups.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::activation::{ActivationDataset, LayerActivations};
use crate::error::{Error, Result};

/// Smallest distance between two subgroup means, in units of the noise
/// standard deviation.
pub const SUBGROUP_SPACING: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_per_subgroup: usize,
    pub subgroups_per_class: usize,
    pub n_layers: usize,
    pub layer_width: usize,
    pub n_informative: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_per_subgroup: 20,
            subgroups_per_class: 3,
            n_layers: 3,
            layer_width: 100,
            n_informative: 3,
            noise_sigma: 1.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn n_subgroups(&self) -> usize {
        2 * self.subgroups_per_class
    }

    pub fn n_samples(&self) -> usize {
        self.n_subgroups() * self.n_per_subgroup
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_subgroup == 0 || self.subgroups_per_class == 0 {
            return Err(Error::InvalidConfig("synthetic spec has no samples".into()));
        }
        if self.n_layers == 0 || self.layer_width == 0 {
            return Err(Error::InvalidConfig("synthetic spec has no neurons".into()));
        }
        if self.n_informative > self.layer_width {
            return Err(Error::InvalidConfig(format!(
                "n_informative {} exceeds layer_width {}",
                self.n_informative, self.layer_width
            )));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig("noise_sigma must be positive".into()));
        }
        Ok(())
    }
}

/// What the generator planted, for scoring recoveries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    pub subgroups: Vec<usize>,
    /// Informative column indices per layer, ascending.
    pub informative: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub dataset: ActivationDataset,
    pub truth: GroundTruth,
}

pub fn layer_name(l: usize) -> String {
    format!("layer{l}")
}

/// Samples are laid out subgroup by subgroup; subgroup `s` belongs to class
/// `s / subgroups_per_class`. On an informative column `j` its mean is
/// `sign_j * scale_j * 6σ * s` with a random sign and a scale in [1, 1.5],
/// so classes are linearly separable and subgroups stay at least 6σ apart.
/// All other columns are pure `N(0, σ²)` noise.
/// Subgroup means on the informative columns of one layer, indexed by
/// subgroup then informative column.
///
/// The two classes sit `SUBGROUP_SPACING` apart along a direction `u` whose
/// entries all have magnitude comparable to each other, so the label is
/// linear in every informative column. The subgroups of one class form a
/// regular simplex with that edge length in the space orthogonal to `u`.
/// This keeps the informative block close to full rank: a block with one
/// nearly degenerate direction draws large weights from fits to unrelated
/// targets. When there are too few columns for the simplex the subgroups
/// fall back to a line, and with a single column every subgroup shares
/// that axis.
fn subgroup_means(rng: &mut ChaCha8Rng, spec: &SynthSpec, n_inf: usize) -> Vec<Vec<f64>> {
    let spacing = SUBGROUP_SPACING * spec.noise_sigma;
    let per_class = spec.subgroups_per_class;
    let mut u: Vec<f64> = (0..n_inf)
        .map(|_| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * rng.random_range(1.0..=1.5)
        })
        .collect();
    normalize(&mut u);
    if n_inf < 2 {
        return (0..spec.n_subgroups())
            .map(|s| u.iter().map(|uk| s as f64 * spacing * uk).collect())
            .collect();
    }

    // orthonormal directions spanning part of the complement of u
    let want = (per_class - 1).clamp(1, n_inf - 1);
    let mut basis: Vec<Vec<f64>> = vec![u.clone()];
    while basis.len() < want + 1 {
        let mut v: Vec<f64> = (0..n_inf).map(|_| rng.sample(StandardNormal)).collect();
        for e in &basis {
            let d: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(e).for_each(|(a, b)| *a -= d * b);
        }
        if normalize(&mut v) {
            basis.push(v);
        }
    }
    let simplex = per_class - 1 < n_inf;

    // Helmert coordinates of the simplex vertex t, edge length `spacing`
    let within = |t: usize| -> Vec<f64> {
        if !simplex {
            let centre = (per_class as f64 - 1.0) / 2.0;
            return vec![(t as f64 - centre) * spacing];
        }
        (1..per_class)
            .map(|m| {
                let norm = ((m * (m + 1)) as f64).sqrt();
                let h = match t.cmp(&m) {
                    std::cmp::Ordering::Less => 1.0 / norm,
                    std::cmp::Ordering::Equal => -(m as f64) / norm,
                    std::cmp::Ordering::Greater => 0.0,
                };
                h * spacing / std::f64::consts::SQRT_2
            })
            .collect()
    };

    (0..spec.n_subgroups())
        .map(|s| {
            let class = (s / per_class) as f64 - 0.5;
            let coords = within(s % per_class);
            (0..n_inf)
                .map(|k| {
                    class * spacing * u[k]
                        + coords
                            .iter()
                            .zip(&basis[1..])
                            .map(|(c, v)| c * v[k])
                            .sum::<f64>()
                })
                .collect()
        })
        .collect()
}

/// Scales `x` to unit length; false when it is (numerically) zero.
fn normalize(x: &mut [f64]) -> bool {
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm < 1e-9 {
        return false;
    }
    x.iter_mut().for_each(|a| *a /= norm);
    true
}

pub fn generate_synthetic_activations(spec: &SynthSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let n = spec.n_samples();
    let sigma = spec.noise_sigma;
    let subgroups: Vec<usize> = (0..n).map(|i| i / spec.n_per_subgroup).collect();
    let labels: Vec<u8> = subgroups
        .iter()
        .map(|&s| (s / spec.subgroups_per_class) as u8)
        .collect();
    let sample_ids = (0..n).map(|i| format!("s{i}")).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut layers = Vec::with_capacity(spec.n_layers);
    let mut informative = BTreeMap::new();
    for l in 0..spec.n_layers {
        let mut cols = sample(&mut rng, spec.layer_width, spec.n_informative).into_vec();
        cols.sort_unstable();
        let means = subgroup_means(&mut rng, spec, cols.len());
        let mut matrix = Array2::zeros((n, spec.layer_width));
        for (i, mut row) in matrix.rows_mut().into_iter().enumerate() {
            for v in row.iter_mut() {
                *v = noise.sample(&mut rng);
            }
            for (k, &j) in cols.iter().enumerate() {
                row[j] += means[subgroups[i]][k];
            }
        }
        let name = layer_name(l);
        layers.push(LayerActivations::new(name.clone(), matrix)?);
        informative.insert(name, cols);
    }
    Ok(SyntheticData {
        dataset: ActivationDataset::new(layers, labels, sample_ids)?,
        truth: GroundTruth {
            spec: spec.clone(),
            subgroups,
            informative,
        },
    })
}

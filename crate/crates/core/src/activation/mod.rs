//! Activation datasets: per-layer neuron activation matrices exported from a
//! classifier, plus the coarse label vector and sample identifiers.

mod io;
mod stack;

use std::collections::HashSet;
use std::fmt;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    load_activation_dataset, read_csv, read_lavabin, save_activation_dataset, write_csv,
    write_lavabin, DatasetFormat, LAVABIN_MAGIC,
};
pub use stack::{stack_critical, ColumnSource, StackedMatrix};

/// A neuron addressed by layer name and 0-based position within the layer.
///
/// Ordering is lexicographic on the layer name, then the index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NeuronId {
    pub layer: String,
    pub index: usize,
}

impl NeuronId {
    pub fn new(layer: impl Into<String>, index: usize) -> Self {
        NeuronId {
            layer: layer.into(),
            index,
        }
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.layer, self.index)
    }
}

/// Activations of one layer: rows are samples, columns are neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivations {
    pub layer: String,
    pub matrix: Array2<f64>,
    pub fold: Option<u32>,
}

impl LayerActivations {
    pub fn new(layer: impl Into<String>, matrix: Array2<f64>) -> Result<Self> {
        let layer = layer.into();
        if layer.is_empty() {
            return Err(Error::MalformedHeader("empty layer name".into()));
        }
        if matrix.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "layer {layer:?} has width 0"
            )));
        }
        if let Some(((row, col), _)) = matrix.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row,
                column: format!("{layer}:{col}"),
            });
        }
        Ok(LayerActivations {
            layer,
            matrix,
            fold: None,
        })
    }

    pub fn with_fold(mut self, fold: u32) -> Self {
        self.fold = Some(fold);
        self
    }

    pub fn width(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn column(&self, index: usize) -> ArrayView1<'_, f64> {
        self.matrix.column(index)
    }
}

/// All exported layers for one model over a common sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationDataset {
    layers: Vec<LayerActivations>,
    labels: Vec<u8>,
    sample_ids: Vec<String>,
}

impl ActivationDataset {
    pub fn new(
        layers: Vec<LayerActivations>,
        labels: Vec<u8>,
        sample_ids: Vec<String>,
    ) -> Result<Self> {
        let n = labels.len();
        if sample_ids.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} sample ids for {} labels",
                sample_ids.len(),
                n
            )));
        }
        if let Some((row, label)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
            return Err(Error::UnknownLabel {
                row,
                label: label.to_string(),
            });
        }
        let mut seen_layers = HashSet::new();
        for layer in &layers {
            if layer.matrix.nrows() != n {
                return Err(Error::DimensionMismatch(format!(
                    "layer {:?} has {} rows, expected {}",
                    layer.layer,
                    layer.matrix.nrows(),
                    n
                )));
            }
            if !seen_layers.insert(layer.layer.as_str()) {
                return Err(Error::MalformedHeader(format!(
                    "layer {:?} declared twice",
                    layer.layer
                )));
            }
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateSampleId(id.clone()));
            }
        }
        Ok(ActivationDataset {
            layers,
            labels,
            sample_ids,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn layers(&self) -> &[LayerActivations] {
        &self.layers
    }

    pub fn layer(&self, name: &str) -> Option<&LayerActivations> {
        self.layers.iter().find(|l| l.layer == name)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    /// Tags every layer with the cross-validation model index.
    pub fn with_fold(mut self, fold: u32) -> Self {
        for layer in &mut self.layers {
            layer.fold = Some(fold);
        }
        self
    }

    pub fn contains(&self, neuron: &NeuronId) -> bool {
        self.layer(&neuron.layer)
            .is_some_and(|l| neuron.index < l.width())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: String,
    pub width: usize,
    pub constant_columns: usize,
}

/// Summary of a loaded dataset. Non-finite values are rejected at load time,
/// so a report always describes finite data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_samples: usize,
    pub label_counts: [usize; 2],
    pub layers: Vec<LayerReport>,
}

pub fn validate_dataset(dataset: &ActivationDataset) -> ValidationReport {
    let mut label_counts = [0usize; 2];
    for &l in dataset.labels() {
        label_counts[l as usize] += 1;
    }
    let layers = dataset
        .layers()
        .iter()
        .map(|layer| {
            let constant_columns = layer
                .matrix
                .columns()
                .into_iter()
                .filter(|col| {
                    let first = col[0];
                    col.iter().all(|&v| v == first)
                })
                .count();
            LayerReport {
                layer: layer.layer.clone(),
                width: layer.width(),
                constant_columns,
            }
        })
        .collect();
    ValidationReport {
        n_samples: dataset.n_samples(),
        label_counts,
        layers,
    }
}

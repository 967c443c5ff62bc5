use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ActivationDataset, NeuronId};
use crate::error::{Error, Result};
use crate::probing::CriticalNeuronSet;

/// Where a stacked column came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSource {
    pub fold: Option<u32>,
    pub neuron: NeuronId,
}

/// Critical-neuron activations of every fold, side by side. The same neuron
/// may appear several times when several folds selected it.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedMatrix {
    pub matrix: Array2<f64>,
    pub columns: Vec<ColumnSource>,
    pub sample_ids: Vec<String>,
}

/// Concatenates selected columns fold-major, then in dataset layer order,
/// then by rank. `selections[f]` holds the per-layer sets chosen on
/// `datasets[f]`.
pub fn stack_critical(
    datasets: &[ActivationDataset],
    selections: &[Vec<CriticalNeuronSet>],
) -> Result<StackedMatrix> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::DegenerateInput("no datasets to stack".into()))?;
    if datasets.len() != selections.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} datasets but {} selection lists",
            datasets.len(),
            selections.len()
        )));
    }
    for (f, ds) in datasets.iter().enumerate().skip(1) {
        if ds.sample_ids() != first.sample_ids() {
            return Err(Error::SampleOrderMismatch(format!(
                "fold {f} sample ids differ from fold 0"
            )));
        }
    }

    let n = first.n_samples();
    let mut columns = Vec::new();
    let mut data: Vec<ndarray::ArrayView1<'_, f64>> = Vec::new();
    for (f, (ds, sets)) in datasets.iter().zip(selections).enumerate() {
        for set in sets {
            if ds.layer(&set.layer).is_none() {
                if let Some(n) = set.neurons.first() {
                    return Err(Error::UnknownNeuron {
                        layer: set.layer.clone(),
                        index: n.neuron.index,
                    });
                }
            }
        }
        for layer in ds.layers() {
            for set in sets.iter().filter(|s| s.layer == layer.layer) {
                let mut ranked: Vec<_> = set.neurons.iter().collect();
                ranked.sort_by_key(|n| n.rank);
                for entry in ranked {
                    let id = &entry.neuron;
                    if id.layer != layer.layer || id.index >= layer.width() {
                        return Err(Error::UnknownNeuron {
                            layer: id.layer.clone(),
                            index: id.index,
                        });
                    }
                    data.push(layer.column(id.index));
                    columns.push(ColumnSource {
                        fold: set.fold.or(Some(f as u32)),
                        neuron: id.clone(),
                    });
                }
            }
        }
    }

    let matrix = Array2::from_shape_fn((n, data.len()), |(i, j)| data[j][i]);
    Ok(StackedMatrix {
        matrix,
        columns,
        sample_ids: first.sample_ids().to_vec(),
    })
}

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use super::svr::{svr_feature_scores, train_epsilon_svr, SvrConfig};
use super::{CriticalNeuronSet, RankedNeuron};
use crate::activation::{LayerActivations, NeuronId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfeConfig {
    pub n_select: usize,
    pub step: usize,
}

impl Default for RfeConfig {
    fn default() -> Self {
        RfeConfig {
            n_select: 20,
            step: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeRound {
    pub survivors: usize,
    pub removed: usize,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeOutcome {
    pub selection: CriticalNeuronSet,
    /// One entry per SVR fit, the last being the ranking fit on the survivors.
    pub rounds: Vec<RfeRound>,
}

impl RfeOutcome {
    pub fn warnings(&self) -> impl Iterator<Item = String> + '_ {
        self.rounds
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.converged)
            .map(|(i, r)| {
                format!(
                    "layer {}: fit {} stopped at {} iterations without converging",
                    self.selection.layer, i, r.iterations
                )
            })
    }
}

/// Number of columns removed in each elimination round.
pub fn elimination_schedule(width: usize, n_select: usize, step: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut surviving = width;
    while surviving > n_select {
        let k = step.min(surviving - n_select);
        out.push(k);
        surviving -= k;
    }
    out
}

/// Recursive feature elimination driven by squared linear-SVR weights.
///
/// `predicted` is the model's predicted label per sample, regressed as
/// `{0.0, 1.0}`. Among equal scores the larger neuron index is removed first.
pub fn rfe_select(
    layer: &LayerActivations,
    predicted: &[u8],
    svr: &SvrConfig,
    cfg: &RfeConfig,
) -> Result<RfeOutcome> {
    let width = layer.width();
    if cfg.n_select > width {
        return Err(Error::SelectionTooLarge {
            requested: cfg.n_select,
            available: width,
        });
    }
    if cfg.step == 0 {
        return Err(Error::InvalidConfig("RFE step must be positive".into()));
    }
    if predicted.len() != layer.matrix.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} samples",
            predicted.len(),
            layer.matrix.nrows()
        )));
    }
    let target: Vec<f64> = predicted.iter().map(|&l| f64::from(l)).collect();

    let mut surviving: Vec<usize> = (0..width).collect();
    let mut rounds = Vec::new();
    if cfg.n_select == 0 {
        return Ok(RfeOutcome {
            selection: CriticalNeuronSet {
                layer: layer.layer.clone(),
                fold: layer.fold,
                neurons: Vec::new(),
            },
            rounds,
        });
    }

    loop {
        let sub = layer.matrix.select(Axis(1), &surviving);
        let model = train_epsilon_svr(sub.view(), &target, svr)?;
        let scores = svr_feature_scores(&model);
        let excess = surviving.len() - cfg.n_select;
        let removed = excess.min(cfg.step);
        rounds.push(RfeRound {
            survivors: surviving.len(),
            removed,
            converged: model.converged,
            iterations: model.iterations,
        });

        let mut order: Vec<usize> = (0..surviving.len()).collect();
        if removed == 0 {
            // best first; ties go to the smaller index
            order.sort_by(|&a, &b| {
                scores[b]
                    .total_cmp(&scores[a])
                    .then(surviving[a].cmp(&surviving[b]))
            });
            let neurons = order
                .iter()
                .enumerate()
                .map(|(rank, &k)| RankedNeuron {
                    neuron: NeuronId::new(layer.layer.clone(), surviving[k]),
                    score: scores[k],
                    rank: rank + 1,
                })
                .collect();
            return Ok(RfeOutcome {
                selection: CriticalNeuronSet {
                    layer: layer.layer.clone(),
                    fold: layer.fold,
                    neurons,
                },
                rounds,
            });
        }

        // worst first; ties go to the larger index
        order.sort_by(|&a, &b| {
            scores[a]
                .total_cmp(&scores[b])
                .then(surviving[b].cmp(&surviving[a]))
        });
        let mut drop = vec![false; surviving.len()];
        for &k in &order[..removed] {
            drop[k] = true;
        }
        surviving = surviving
            .iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|(&c, _)| c)
            .collect();
    }
}

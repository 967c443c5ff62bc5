//! Critical-neuron probing: linear epsilon-SVR scoring wrapped in recursive
//! feature elimination, cross-fold ensembling, Jaccard comparisons and
//! mutual-information diagnostics.

mod ipm;
mod mi;
mod rfe;
mod svr;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::activation::{ActivationDataset, NeuronId};
use crate::error::{Error, Result};

pub use mi::{
    default_bins, equal_frequency_bins, mutual_information_discrete, mutual_information_kde,
    MiEstimate, MiEstimator, KDE_GRID_POINTS,
};
pub use rfe::{elimination_schedule, rfe_select, RfeConfig, RfeOutcome, RfeRound};
pub use svr::{
    svr_feature_scores, train_epsilon_svr, Kernel, Standardizer, SvrConfig, SvrModel, SvrSolver,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedNeuron {
    #[serde(flatten)]
    pub neuron: NeuronId,
    pub score: f64,
    pub rank: usize,
}

/// Neurons selected on one layer by one model, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalNeuronSet {
    pub layer: String,
    pub fold: Option<u32>,
    pub neurons: Vec<RankedNeuron>,
}

impl CriticalNeuronSet {
    pub fn ids(&self) -> BTreeSet<NeuronId> {
        self.neurons.iter().map(|n| n.neuron.clone()).collect()
    }
}

/// Runs RFE on every layer of `dataset`, using its label column as the
/// predicted-label target.
pub fn probe_dataset(
    dataset: &ActivationDataset,
    svr: &SvrConfig,
    cfg: &RfeConfig,
) -> Result<Vec<RfeOutcome>> {
    dataset
        .layers()
        .iter()
        .map(|layer| rfe_select(layer, dataset.labels(), svr, cfg))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEntry {
    pub fold: Option<u32>,
    pub neuron: NeuronId,
    pub score: f64,
}

/// Concatenates one layer's selections across folds, keeping repeats.
pub fn ensemble_folds(sets: &[CriticalNeuronSet]) -> Result<Vec<EnsembleEntry>> {
    let Some(first) = sets.first() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::with_capacity(sets.iter().map(|s| s.neurons.len()).sum());
    for set in sets {
        if set.layer != first.layer {
            return Err(Error::LayerMismatch {
                expected: first.layer.clone(),
                found: set.layer.clone(),
            });
        }
        let mut ranked: Vec<_> = set.neurons.iter().collect();
        ranked.sort_by_key(|n| n.rank);
        out.extend(ranked.into_iter().map(|n| EnsembleEntry {
            fold: set.fold,
            neuron: n.neuron.clone(),
            score: n.score,
        }));
    }
    Ok(out)
}

/// `|a ∩ b| / |a ∪ b|`, taken as 1 when both sets are empty.
pub fn jaccard_index<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Pairwise Jaccard similarity between the selections of each fold.
pub fn jaccard_matrix(sets: &[CriticalNeuronSet]) -> Vec<Vec<f64>> {
    let ids: Vec<_> = sets.iter().map(CriticalNeuronSet::ids).collect();
    ids.iter()
        .map(|a| ids.iter().map(|b| jaccard_index(a, b)).collect())
        .collect()
}

pub const SANITY_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSanity {
    pub layer: String,
    pub jaccard: f64,
    /// Overlap above the threshold: this layer's explanation barely depends
    /// on the model parameters.
    pub suspicious: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityReport {
    pub threshold: f64,
    pub layers: Vec<LayerSanity>,
    pub mean_jaccard: f64,
    pub verdict: Verdict,
}

impl fmt::Display for SanityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .layers
            .iter()
            .map(|l| l.layer.len())
            .max()
            .unwrap_or(5)
            .max(5);
        writeln!(f, "{:<width$}  {:>8}  flag", "layer", "jaccard")?;
        for l in &self.layers {
            let flag = if l.suspicious { "suspicious" } else { "ok" };
            writeln!(f, "{:<width$}  {:>8.4}  {}", l.layer, l.jaccard, flag)?;
        }
        let verdict = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "explanation insensitive — FAIL",
        };
        write!(
            f,
            "mean jaccard {:.4} (threshold {}): {}",
            self.mean_jaccard, self.threshold, verdict
        )
    }
}

fn union_by_layer(sets: &[CriticalNeuronSet]) -> BTreeMap<String, BTreeSet<NeuronId>> {
    let mut out: BTreeMap<String, BTreeSet<NeuronId>> = BTreeMap::new();
    for set in sets {
        out.entry(set.layer.clone()).or_default().extend(set.ids());
    }
    out
}

/// Compares selections from a trained model against selections made with
/// randomized parameters. Each layer's folds are pooled into one set before
/// comparing; the run passes when the mean per-layer Jaccard is below
/// [`SANITY_THRESHOLD`].
pub fn sanity_check(
    trained: &[CriticalNeuronSet],
    randomized: &[CriticalNeuronSet],
) -> Result<SanityReport> {
    let a = union_by_layer(trained);
    let b = union_by_layer(randomized);
    if a.keys().ne(b.keys()) {
        let left: Vec<_> = a.keys().collect();
        let right: Vec<_> = b.keys().collect();
        return Err(Error::LayerSetMismatch(format!("{left:?} vs {right:?}")));
    }
    if a.is_empty() {
        return Err(Error::LayerSetMismatch("no layers to compare".into()));
    }
    let layers: Vec<LayerSanity> = a
        .iter()
        .zip(b.values())
        .map(|((layer, x), y)| {
            let jaccard = jaccard_index(x, y);
            LayerSanity {
                layer: layer.clone(),
                jaccard,
                suspicious: jaccard > SANITY_THRESHOLD,
            }
        })
        .collect();
    let mean_jaccard = layers.iter().map(|l| l.jaccard).sum::<f64>() / layers.len() as f64;
    let verdict = if mean_jaccard < SANITY_THRESHOLD {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(SanityReport {
        threshold: SANITY_THRESHOLD,
        layers,
        mean_jaccard,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(layer: &str, fold: u32, idx: &[usize]) -> CriticalNeuronSet {
        CriticalNeuronSet {
            layer: layer.into(),
            fold: Some(fold),
            neurons: idx
                .iter()
                .enumerate()
                .map(|(r, &i)| RankedNeuron {
                    neuron: NeuronId::new(layer, i),
                    score: (idx.len() - r) as f64,
                    rank: r + 1,
                })
                .collect(),
        }
    }

    fn ids(v: &[usize]) -> BTreeSet<NeuronId> {
        v.iter().map(|&i| NeuronId::new("l", i)).collect()
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard_index(&ids(&[1, 2]), &ids(&[1, 2])), 1.0);
        assert_eq!(jaccard_index(&ids(&[1, 2]), &ids(&[3])), 0.0);
        assert_eq!(jaccard_index(&ids(&[1, 2, 3]), &ids(&[2, 3, 4])), 0.5);
        assert_eq!(jaccard_index(&ids(&[]), &ids(&[])), 1.0);
        assert_eq!(jaccard_index(&ids(&[5]), &ids(&[])), 0.0);
    }

    proptest! {
        #[test]
        fn jaccard_distance_is_a_metric(
            a in prop::collection::btree_set(0u8..20, 0..10),
            b in prop::collection::btree_set(0u8..20, 0..10),
            c in prop::collection::btree_set(0u8..20, 0..10),
        ) {
            let d = |x: &BTreeSet<u8>, y: &BTreeSet<u8>| 1.0 - jaccard_index(x, y);
            prop_assert_eq!(jaccard_index(&a, &b), jaccard_index(&b, &a));
            prop_assert_eq!(jaccard_index(&a, &a), 1.0);
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        }
    }

    #[test]
    fn ensemble_keeps_repeats_in_fold_then_rank_order() {
        let sets: Vec<_> = (0..5)
            .map(|f| set("conv", f, &(0..20).collect::<Vec<_>>()))
            .collect();
        let e = ensemble_folds(&sets).unwrap();
        assert_eq!(e.len(), 100);
        assert_eq!(e.iter().filter(|x| x.neuron.index == 7).count(), 5);
        assert_eq!(e[20].fold, Some(1));
        assert_eq!(e[20].neuron.index, 0);

        let single = ensemble_folds(&sets[..1]).unwrap();
        assert_eq!(single.len(), 20);

        let mixed = [set("a", 0, &[1]), set("b", 1, &[1])];
        assert!(matches!(
            ensemble_folds(&mixed),
            Err(Error::LayerMismatch { .. })
        ));
    }

    #[test]
    fn jaccard_matrix_single_fold() {
        assert_eq!(jaccard_matrix(&[set("l", 0, &[1, 2])]), vec![vec![1.0]]);
    }

    #[test]
    fn sanity_identical_runs_fail() {
        let run = vec![set("a", 0, &[1, 2]), set("b", 0, &[3]), set("a", 1, &[4])];
        let report = sanity_check(&run, &run).unwrap();
        assert!(report
            .layers
            .iter()
            .all(|l| l.jaccard == 1.0 && l.suspicious));
        assert_eq!(report.verdict, Verdict::Fail);
        assert!(report.to_string().contains("FAIL"));
    }

    #[test]
    fn sanity_low_overlap_passes() {
        // fc-3 with 0.008 overlap and zero elsewhere
        let mut trained = vec![set("fc3", 0, &(0..62).collect::<Vec<_>>())];
        let mut random = vec![set("fc3", 0, &(61..125).collect::<Vec<_>>())];
        trained.push(set("conv", 0, &[1, 2]));
        random.push(set("conv", 0, &[3, 4]));
        let report = sanity_check(&trained, &random).unwrap();
        assert!((report.layers[1].jaccard - 1.0 / 125.0).abs() < 1e-12);
        assert_eq!(report.verdict, Verdict::Pass);

        let err = sanity_check(&trained, &random[..1]).unwrap_err();
        assert!(matches!(err, Error::LayerSetMismatch(_)));
    }

    #[test]
    fn critical_set_json_shape() {
        let s = set("fc", 2, &[4]);
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "layer": "fc",
                "fold": 2,
                "neurons": [{"layer": "fc", "index": 4, "score": 1.0, "rank": 1}]
            })
        );
    }
}

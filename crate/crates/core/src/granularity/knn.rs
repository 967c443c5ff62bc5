use std::cmp::Ordering;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::distance::squared_euclidean;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KnnMode {
    #[default]
    FeatureSpace,
    /// Cross-label links are dropped before symmetrization.
    SameLabelOnly,
}

/// Sparse sample adjacency used to restrict which clusters may merge.
///
/// `directed` holds each sample's own neighbor list (itself included);
/// `adjacency` is the symmetrized union in row-compressed form, with no
/// self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityGraph {
    n: usize,
    k: usize,
    directed: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

impl ConnectivityGraph {
    /// Builds a graph from per-sample directed neighbor lists.
    pub fn from_directed(n: usize, k: usize, directed: Vec<Vec<usize>>) -> Result<Self> {
        if directed.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} neighbor lists for {n} samples",
                directed.len()
            )));
        }
        let mut sym: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, row) in directed.iter().enumerate() {
            for &j in row {
                if j >= n {
                    return Err(Error::DimensionMismatch(format!(
                        "neighbor {j} out of range"
                    )));
                }
                if i != j {
                    sym[i].push(j);
                    sym[j].push(i);
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for mut row in sym {
            row.sort_unstable();
            row.dedup();
            indices.extend(row);
            offsets.push(indices.len());
        }
        Ok(ConnectivityGraph {
            n,
            k,
            directed,
            offsets,
            indices,
        })
    }

    /// Every sample linked to every other.
    pub fn complete(n: usize) -> Self {
        let directed = (0..n).map(|_| (0..n).collect()).collect();
        ConnectivityGraph::from_directed(n, n, directed).expect("complete graph is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn directed(&self) -> &[Vec<usize>] {
        &self.directed
    }

    /// Symmetrized neighbors of `i`, ascending, self excluded.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn directed_nnz(&self) -> usize {
        self.directed.iter().map(Vec::len).sum()
    }

    /// Fraction of zero entries in the directed `n x n` matrix.
    pub fn directed_sparsity(&self) -> f64 {
        1.0 - self.directed_nnz() as f64 / (self.n as f64 * self.n as f64)
    }

    pub fn is_complete(&self) -> bool {
        (0..self.n).all(|i| self.neighbors(i).len() + 1 == self.n)
    }

    /// Connected components of the symmetrized graph, each sorted, ordered
    /// by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in self.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// k-nearest-neighbor connectivity, each sample counting itself as one of
/// its `k` neighbors. The remaining `k - 1` are chosen by a partial
/// partition at position `k - 2` of the other samples ordered by
/// (distance, index), so equidistant candidates resolve to the smaller
/// index.
pub fn build_knn_graph(
    x: ArrayView2<'_, f64>,
    k: usize,
    mode: KnnMode,
    labels: Option<&[u8]>,
) -> Result<ConnectivityGraph> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let labels = match mode {
        KnnMode::FeatureSpace => None,
        KnnMode::SameLabelOnly => {
            let l = labels.ok_or(Error::MissingReference)?;
            if l.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {n} samples",
                    l.len()
                )));
            }
            Some(l)
        }
    };
    let cmp = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
    };

    let mut directed = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = vec![i];
        if k > 1 {
            let mut cands: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_euclidean(x.row(i), x.row(j)), j))
                .collect();
            cands.select_nth_unstable_by(k - 2, cmp);
            let mut nearest = cands[..k - 1].to_vec();
            nearest.sort_by(cmp);
            row.extend(nearest.into_iter().map(|(_, j)| j));
        }
        if let Some(l) = labels {
            row.retain(|&j| l[j] == l[i]);
        }
        directed.push(row);
    }
    ConnectivityGraph::from_directed(n, k, directed)
}

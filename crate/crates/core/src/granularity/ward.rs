//! Ward agglomerative clustering under a connectivity constraint.
//!
//! Dissimilarities start as squared Euclidean distances between samples and
//! are carried forward with the Lance-Williams recurrence
//!
//! ```text
//! D(A∪B, C) = ((nA+nC) D(A,C) + (nB+nC) D(B,C) - nC D(A,B)) / (nA+nB+nC)
//! ```
//!
//! which keeps `D(A, B) = 2 nA nB / (nA+nB) |cA - cB|^2`, twice the increase
//! in within-cluster sum of squares caused by merging `A` and `B`.

use std::collections::BTreeSet;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::distance::squared_euclidean;
use super::knn::ConnectivityGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub cost: f64,
    pub size: usize,
}

/// Full merge history. Leaves are nodes `0..n`, merge `m` creates node `n + m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WardTree {
    pub n: usize,
    pub merges: Vec<Merge>,
    /// Indices into `merges` that joined clusters with no edge between them
    /// (only happens when the constraint graph is disconnected).
    #[serde(default)]
    pub cross_component: Vec<usize>,
}

impl WardTree {
    pub fn node_size(&self, node: usize) -> usize {
        if node < self.n {
            1
        } else {
            self.merges[node - self.n].size
        }
    }

    /// Sorted leaf members of `node`.
    pub fn members(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            if v < self.n {
                out.push(v);
            } else {
                let m = &self.merges[v - self.n];
                stack.push(m.left);
                stack.push(m.right);
            }
        }
        out.sort_unstable();
        out
    }

    /// Checks the structural invariants: `n - 1` merges, every node used as
    /// a child exactly once (root excepted), children created before parents
    /// and sizes adding up.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.merges.len() != self.n - 1 {
            return Err(Error::MalformedFile(format!(
                "{} merges for {} leaves",
                self.merges.len(),
                self.n
            )));
        }
        let mut used = vec![false; 2 * self.n - 1];
        for (m, merge) in self.merges.iter().enumerate() {
            let node = self.n + m;
            for child in [merge.left, merge.right] {
                if child >= node || used[child] {
                    return Err(Error::MalformedFile(format!(
                        "node {child} is not a fresh child of merge {m}"
                    )));
                }
                used[child] = true;
            }
            if merge.size != self.node_size(merge.left) + self.node_size(merge.right) {
                return Err(Error::MalformedFile(format!(
                    "merge {m} has inconsistent size"
                )));
            }
            if !(merge.cost >= 0.0) {
                return Err(Error::MalformedFile(format!("merge {m} has invalid cost")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    pub sizes: Vec<usize>,
}

impl ClusterAssignment {
    /// Relabels arbitrary cluster keys by increasing smallest member.
    pub fn from_keys(keys: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let mut labels = Vec::with_capacity(keys.len());
        let mut sizes = Vec::new();
        for &k in keys {
            let next = map.len();
            let label = *map.entry(k).or_insert(next);
            if label == sizes.len() {
                sizes.push(0);
            }
            sizes[label] += 1;
            labels.push(label);
        }
        ClusterAssignment {
            labels,
            n_clusters: sizes.len(),
            sizes,
        }
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == cluster)
            .collect()
    }
}

/// Agglomerates all samples into one tree. Only pairs adjacent in the
/// contracted constraint graph may merge; among those the smallest `D`
/// wins, ties going to the smallest (min id, max id) pair. When no adjacent
/// pair remains but several clusters do, the cheapest pair overall is merged
/// and recorded in [`WardTree::cross_component`].
pub fn ward_tree(x: ArrayView2<'_, f64>, graph: &ConnectivityGraph) -> Result<WardTree> {
    let n = x.nrows();
    if graph.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes for {n} samples",
            graph.n()
        )));
    }
    if n == 0 {
        return Err(Error::DegenerateInput("no samples".into()));
    }

    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = squared_euclidean(x.row(i), x.row(j));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    // slot s holds the cluster whose node id is node_of[s]
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut adj: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| graph.neighbors(i).iter().copied().collect())
        .collect();

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut cross_component = Vec::new();
    for step in 0..n.saturating_sub(1) {
        let better = |cand: (f64, usize, usize),
                      best: &Option<(f64, usize, usize, usize, usize)>| {
            match best {
                None => true,
                Some((bd, bl, br, _, _)) => {
                    cand.0 < *bd || (cand.0 == *bd && (cand.1, cand.2) < (*bl, *br))
                }
            }
        };
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..n {
            if !active[a] {
                continue;
            }
            for &b in adj[a].range(a + 1..) {
                let (lo, hi) = ordered(node_of[a], node_of[b]);
                let cand = (d[a * n + b], lo, hi);
                if better(cand, &best) {
                    best = Some((cand.0, lo, hi, a, b));
                }
            }
        }
        if best.is_none() {
            for a in (0..n).filter(|&a| active[a]) {
                for b in ((a + 1)..n).filter(|&b| active[b]) {
                    let (lo, hi) = ordered(node_of[a], node_of[b]);
                    let cand = (d[a * n + b], lo, hi);
                    if better(cand, &best) {
                        best = Some((cand.0, lo, hi, a, b));
                    }
                }
            }
            cross_component.push(step);
        }
        let (cost, left, right, a, b) = best.expect("at least two active clusters");

        let (na, nb) = (size[a] as f64, size[b] as f64);
        let dab = d[a * n + b];
        for c in 0..n {
            if !active[c] || c == a || c == b {
                continue;
            }
            let nc = size[c] as f64;
            let v =
                ((na + nc) * d[a * n + c] + (nb + nc) * d[b * n + c] - nc * dab) / (na + nb + nc);
            d[a * n + c] = v;
            d[c * n + a] = v;
        }

        let moved = std::mem::take(&mut adj[b]);
        for &c in &moved {
            adj[c].remove(&b);
            if c != a {
                adj[c].insert(a);
                adj[a].insert(c);
            }
        }
        adj[a].remove(&b);
        adj[a].remove(&a);

        active[b] = false;
        size[a] += size[b];
        node_of[a] = n + step;
        merges.push(Merge {
            left,
            right,
            cost: cost.max(0.0),
            size: size[a],
        });
    }

    Ok(WardTree {
        n,
        merges,
        cross_component,
    })
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Undoes the last `r - 1` merges. Clusters are numbered by increasing
/// smallest member.
pub fn cut_tree(tree: &WardTree, r: usize) -> Result<ClusterAssignment> {
    let n = tree.n;
    if r == 0 || r > n {
        return Err(Error::ROutOfRange { r, n });
    }
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for (m, merge) in tree.merges.iter().take(n - r).enumerate() {
        let node = n + m;
        parent[merge.left] = node;
        parent[merge.right] = node;
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(ClusterAssignment::from_keys(&roots))
}

/// [`ward_tree`] followed by [`cut_tree`].
pub fn constrained_ward_hac(
    x: ArrayView2<'_, f64>,
    graph: &ConnectivityGraph,
    r: usize,
) -> Result<(WardTree, ClusterAssignment)> {
    let n = x.nrows();
    if r == 0 || r > n {
        return Err(Error::ROutOfRange { r, n });
    }
    let tree = ward_tree(x, graph)?;
    let assignment = cut_tree(&tree, r)?;
    Ok((tree, assignment))
}

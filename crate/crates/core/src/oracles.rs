//! Brute-force reference solvers for tiny instances.
//!
//! Nothing here calls into the probing or granularity code paths; each
//! oracle evaluates its criterion directly from the raw data.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::granularity::ConnectivityGraph;

pub const ORACLE_SVR_MAX_ROWS: usize = 6;
pub const ORACLE_SVR_MAX_COLS: usize = 3;
pub const ORACLE_HAC_MAX_ROWS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSvr {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

/// `½|w|² + C Σ max(0, |y - w·x - b| - ε)` at a given `w`, with `b` chosen
/// optimally. The loss in `b` is convex piecewise linear so its minimum sits
/// on one of the breakpoints `r_i ± ε`.
fn profiled_objective(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    w: &[f64],
    c: f64,
    eps: f64,
) -> (f64, f64) {
    let residual: Vec<f64> = (0..y.len())
        .map(|i| y[i] - w.iter().zip(x.row(i)).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let loss = |b: f64| {
        residual
            .iter()
            .map(|r| ((r - b).abs() - eps).max(0.0))
            .sum::<f64>()
    };
    let mut best = (f64::INFINITY, 0.0);
    for r in &residual {
        for b in [r - eps, r + eps] {
            let l = loss(b);
            if l < best.0 {
                best = (l, b);
            }
        }
    }
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    (reg + c * best.0, best.1)
}

/// Solves `a x = rhs` in place by Gaussian elimination with partial
/// pivoting. Returns `None` for (numerically) singular systems.
fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = ((row + 1)..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / a[row][row];
    }
    Some(x)
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Inside,
    Above,
    Below,
    OnUpper,
    OnLower,
}

const SIDES: [Side; 5] = [
    Side::Inside,
    Side::Above,
    Side::Below,
    Side::OnUpper,
    Side::OnLower,
];

/// Linear ε-SVR on at most 6×3 data by exhaustive active-set enumeration.
///
/// The primal is piecewise quadratic, with one piece per assignment of every
/// sample to inside the tube, above it, below it, or exactly on one of its
/// two edges. For each of the `5^n` assignments the stationarity conditions
/// of that piece (with edge samples as equality constraints) form a small
/// linear system. Each solution is scored on the true objective with `b`
/// re-profiled, and the best one is returned. The true minimizer solves the
/// system of its own piece, so it is always among the candidates.
pub fn oracle_svr_qp(x: ArrayView2<'_, f64>, y: &[f64], c: f64, epsilon: f64) -> Result<OracleSvr> {
    let (n, m) = x.dim();
    if n > ORACLE_SVR_MAX_ROWS || m > ORACLE_SVR_MAX_COLS {
        return Err(Error::InstanceTooLarge(format!(
            "{n}x{m} exceeds {ORACLE_SVR_MAX_ROWS}x{ORACLE_SVR_MAX_COLS}"
        )));
    }
    if n == 0 || y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for {n} rows",
            y.len()
        )));
    }

    let zero = vec![0.0; m];
    let (f0, b0) = profiled_objective(x, y, &zero, c, epsilon);
    let mut best = (f0, zero, b0);

    let mut sides = vec![Side::Inside; n];
    for code in 0..SIDES.len().pow(n as u32) {
        let mut rest = code;
        for s in sides.iter_mut() {
            *s = SIDES[rest % SIDES.len()];
            rest /= SIDES.len();
        }
        let edges: Vec<usize> = (0..n)
            .filter(|&i| matches!(sides[i], Side::OnUpper | Side::OnLower))
            .collect();
        // unknowns: w (m), b, one multiplier per edge sample
        let dim = m + 1 + edges.len();
        let mut a = vec![vec![0.0; dim]; dim];
        let mut rhs = vec![0.0; dim];
        for d in 0..m {
            a[d][d] = 1.0;
        }
        for i in 0..n {
            let pull = match sides[i] {
                Side::Above => c,
                Side::Below => -c,
                _ => continue,
            };
            // d/dw of C(y - w.x - b - eps) is -C x, moved to the right side
            for d in 0..m {
                rhs[d] += pull * x[[i, d]];
            }
            rhs[m] += pull;
        }
        for (k, &i) in edges.iter().enumerate() {
            let col = m + 1 + k;
            for d in 0..m {
                a[d][col] = x[[i, d]];
                a[col][d] = x[[i, d]];
            }
            a[m][col] = 1.0;
            a[col][m] = 1.0;
            let target = if sides[i] == Side::OnUpper {
                epsilon
            } else {
                -epsilon
            };
            rhs[col] = y[i] - target;
        }
        let Some(sol) = solve_dense(a, rhs) else {
            continue;
        };
        let w = sol[..m].to_vec();
        let (f, b) = profiled_objective(x, y, &w, c, epsilon);
        if f < best.0 {
            best = (f, w, b);
        }
    }

    Ok(OracleSvr {
        weights: best.1,
        bias: best.2,
        objective: best.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleMerge {
    pub left: usize,
    pub right: usize,
    /// Increase in the un-normalized within-cluster sum of squares.
    pub delta: f64,
    pub adjacent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleHac {
    pub merges: Vec<OracleMerge>,
    /// Flat labels after stopping at `r` clusters, numbered by increasing
    /// smallest member.
    pub labels: Vec<usize>,
}

fn ess(x: ArrayView2<'_, f64>, members: &[usize]) -> f64 {
    let m = x.ncols();
    let mut centroid = vec![0.0; m];
    for &i in members {
        for d in 0..m {
            centroid[d] += x[[i, d]];
        }
    }
    for v in &mut centroid {
        *v /= members.len() as f64;
    }
    members
        .iter()
        .map(|&i| {
            (0..m)
                .map(|d| (x[[i, d]] - centroid[d]).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Greedy Ward agglomeration on at most 8 samples, evaluating
/// `ESS(A∪B) - ESS(A) - ESS(B)` from scratch for every candidate pair.
pub fn oracle_hac_inertia(
    x: ArrayView2<'_, f64>,
    graph: &ConnectivityGraph,
    r: usize,
) -> Result<OracleHac> {
    let n = x.nrows();
    if n > ORACLE_HAC_MAX_ROWS {
        return Err(Error::InstanceTooLarge(format!(
            "{n} samples exceeds {ORACLE_HAC_MAX_ROWS}"
        )));
    }
    if graph.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes for {n} samples",
            graph.n()
        )));
    }
    if r == 0 || r > n {
        return Err(Error::ROutOfRange { r, n });
    }
    let linked = |a: &[usize], b: &[usize]| {
        a.iter()
            .any(|&i| b.iter().any(|&j| graph.neighbors(i).contains(&j)))
    };

    // (node id, members)
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    let mut labels = None;
    for step in 0..n.saturating_sub(1) {
        if clusters.len() == r {
            labels = Some(flat_labels(n, &clusters));
        }
        let mut best: Option<(bool, f64, usize, usize, usize, usize)> = None;
        for p in 0..clusters.len() {
            for q in (p + 1)..clusters.len() {
                let (a, b) = (&clusters[p], &clusters[q]);
                let adjacent = linked(&a.1, &b.1);
                let mut union = a.1.clone();
                union.extend(&b.1);
                let delta = ess(x, &union) - ess(x, &a.1) - ess(x, &b.1);
                let (lo, hi) = (a.0.min(b.0), a.0.max(b.0));
                let wins = match best {
                    None => true,
                    Some((badj, bd, blo, bhi, _, _)) => {
                        (adjacent && !badj)
                            || (adjacent == badj
                                && (delta < bd || (delta == bd && (lo, hi) < (blo, bhi))))
                    }
                };
                if wins {
                    best = Some((adjacent, delta, lo, hi, p, q));
                }
            }
        }
        let (adjacent, delta, left, right, p, q) = best.expect("two clusters remain");
        let absorbed = clusters.remove(q).1;
        clusters[p].1.extend(absorbed);
        clusters[p].0 = n + step;
        merges.push(OracleMerge {
            left,
            right,
            delta,
            adjacent,
        });
    }
    let labels = labels.unwrap_or_else(|| flat_labels(n, &clusters));
    Ok(OracleHac { merges, labels })
}

fn flat_labels(n: usize, clusters: &[(usize, Vec<usize>)]) -> Vec<usize> {
    let mut firsts: Vec<(usize, usize)> = clusters
        .iter()
        .enumerate()
        .map(|(k, c)| (*c.1.iter().min().expect("nonempty"), k))
        .collect();
    firsts.sort();
    let mut labels = vec![0; n];
    for (label, &(_, k)) in firsts.iter().enumerate() {
        for &i in &clusters[k].1 {
            labels[i] = label;
        }
    }
    labels
}

//! Internal and external cluster validation indices.

use std::collections::BTreeMap;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::ward::ClusterAssignment;
use crate::error::{Error, Result};

/// Variance ratio criterion: between-cluster dispersion over `R - 1`
/// divided by within-cluster dispersion over `N - R`. Returns 1.0 when the
/// within-cluster dispersion is zero.
pub fn calinski_harabasz(x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {n} rows",
            labels.len()
        )));
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let r = groups.len();
    if r < 2 {
        return Err(Error::SingleCluster);
    }
    if r >= n {
        return Err(Error::DegenerateInput(format!(
            "{r} clusters for {n} samples"
        )));
    }
    let mean = x.mean_axis(ndarray::Axis(0)).expect("non-empty");
    let mut between = 0.0;
    let mut within = 0.0;
    for rows in groups.values() {
        let mut centroid = Array1::<f64>::zeros(x.ncols());
        for &i in rows {
            centroid += &x.row(i);
        }
        centroid /= rows.len() as f64;
        between += rows.len() as f64 * (&centroid - &mean).mapv(|v| v * v).sum();
        for &i in rows {
            within += (&x.row(i) - &centroid).mapv(|v| v * v).sum();
        }
    }
    if within == 0.0 {
        return Ok(1.0);
    }
    Ok((between / (r - 1) as f64) / (within / (n - r) as f64))
}

struct Contingency {
    n: usize,
    cells: Vec<Vec<usize>>,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

fn contingency(truth: &[usize], pred: &[usize]) -> Result<Contingency> {
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} reference labels for {} assignments",
            truth.len(),
            pred.len()
        )));
    }
    let index = |v: &[usize]| {
        let keys: BTreeMap<usize, usize> = v
            .iter()
            .copied()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, k)| (k, i))
            .collect();
        keys
    };
    let ti = index(truth);
    let pi = index(pred);
    let mut cells = vec![vec![0usize; pi.len()]; ti.len()];
    for (t, p) in truth.iter().zip(pred) {
        cells[ti[t]][pi[p]] += 1;
    }
    let rows = cells.iter().map(|r| r.iter().sum()).collect();
    let cols = (0..pi.len())
        .map(|j| cells.iter().map(|r| r[j]).sum())
        .collect();
    Ok(Contingency {
        n: truth.len(),
        cells,
        rows,
        cols,
    })
}

fn entropy(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn mutual_info(t: &Contingency) -> f64 {
    let n = t.n as f64;
    let mut mi = 0.0;
    for (i, row) in t.cells.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (t.rows[i] as f64 * t.cols[j] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Expected mutual information under the hypergeometric permutation model.
fn expected_mutual_info(t: &Contingency) -> f64 {
    let n = t.n;
    let mut ln_fact = vec![0.0; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let nf = n as f64;
    let mut emi = 0.0;
    for &a in &t.rows {
        for &b in &t.cols {
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            for nij in lo..=hi {
                let v = nij as f64;
                let term = v / nf * (nf * v / (a as f64 * b as f64)).ln();
                let ln_p = ln_fact[a] + ln_fact[b] + ln_fact[n - a] + ln_fact[n - b]
                    - ln_fact[n]
                    - ln_fact[nij]
                    - ln_fact[a - nij]
                    - ln_fact[b - nij]
                    - ln_fact[n + nij - a - b];
                emi += term * ln_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information with arithmetic-mean normalization.
pub fn adjusted_mutual_information(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let t = contingency(truth, pred)?;
    // both partitions trivially a single cluster
    if t.rows.len() <= 1 && t.cols.len() <= 1 {
        return Ok(1.0);
    }
    let mi = mutual_info(&t);
    let emi = expected_mutual_info(&t);
    let h_true = entropy(&t.rows, t.n);
    let h_pred = entropy(&t.cols, t.n);
    let mut denom = 0.5 * (h_true + h_pred) - emi;
    let tiny = f64::EPSILON;
    denom = if denom < 0.0 {
        denom.min(-tiny)
    } else {
        denom.max(tiny)
    };
    Ok((mi - emi) / denom)
}

/// Fraction of sample pairs on which the two partitions agree.
pub fn rand_index(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let t = contingency(truth, pred)?;
    let pairs = |c: usize| (c * c.saturating_sub(1) / 2) as f64;
    let total = pairs(t.n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let same_both: f64 = t.cells.iter().flatten().map(|&c| pairs(c)).sum();
    let same_truth: f64 = t.rows.iter().map(|&c| pairs(c)).sum();
    let same_pred: f64 = t.cols.iter().map(|&c| pairs(c)).sum();
    Ok((total + 2.0 * same_both - same_truth - same_pred) / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityCompleteness {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
}

pub fn homogeneity_completeness_v(
    truth: &[usize],
    pred: &[usize],
) -> Result<HomogeneityCompleteness> {
    let t = contingency(truth, pred)?;
    let h_true = entropy(&t.rows, t.n);
    let h_pred = entropy(&t.cols, t.n);
    let mi = mutual_info(&t);
    // H(C|K) = H(C) - I(C;K)
    let homogeneity = if h_true == 0.0 {
        1.0
    } else {
        (mi / h_true).min(1.0)
    };
    let completeness = if h_pred == 0.0 {
        1.0
    } else {
        (mi / h_pred).min(1.0)
    };
    let v_measure = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    Ok(HomogeneityCompleteness {
        homogeneity,
        completeness,
        v_measure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExternalMetrics {
    pub adjusted_mutual_info: f64,
    pub rand_index: f64,
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
}

pub fn external_metrics(pred: &[usize], reference: Option<&[usize]>) -> Result<ExternalMetrics> {
    let truth = reference.ok_or(Error::MissingReference)?;
    let hcv = homogeneity_completeness_v(truth, pred)?;
    Ok(ExternalMetrics {
        adjusted_mutual_info: adjusted_mutual_information(truth, pred)?,
        rand_index: rand_index(truth, pred)?,
        homogeneity: hcv.homogeneity,
        completeness: hcv.completeness,
        v_measure: hcv.v_measure,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub n_clusters: usize,
    pub calinski_harabasz: f64,
    pub external: Option<ExternalMetrics>,
}

pub fn cluster_quality(
    x: ArrayView2<'_, f64>,
    assignment: &ClusterAssignment,
    reference: Option<&[usize]>,
) -> Result<QualityReport> {
    let calinski_harabasz = calinski_harabasz(x, &assignment.labels)?;
    let external = match reference {
        Some(r) => Some(external_metrics(&assignment.labels, Some(r))?),
        None => None,
    };
    Ok(QualityReport {
        n_clusters: assignment.n_clusters,
        calinski_harabasz,
        external,
    })
}

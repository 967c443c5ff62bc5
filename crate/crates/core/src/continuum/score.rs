use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::granularity::ClusterAssignment;

use super::table::MetricTable;

/// Severity score per sample: 0 is the healthiest possible subject, 1 the
/// most severe. `table` must already be normalized so that 1 means healthy.
pub fn ad_score(table: &MetricTable, columns: &[String]) -> Result<Vec<f64>> {
    if columns.is_empty() {
        return Err(Error::InvalidConfig("no score columns given".into()));
    }
    let mut picked = Vec::with_capacity(columns.len());
    for name in columns {
        let col = table.column(name)?;
        picked.push(
            col.complete()
                .ok_or_else(|| Error::MissingValues(col.name.clone()))?,
        );
    }
    let k = picked.len() as f64;
    Ok((0..table.n_samples())
        .map(|i| {
            let health = picked.iter().map(|c| c[i]).sum::<f64>() / k;
            (1.0 - health).clamp(0.0, 1.0)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub name: String,
    pub size: usize,
    /// Members with coarse label 0 and 1.
    pub label_counts: [usize; 2],
    pub mean_score: f64,
    pub min_score: f64,
    pub max_score: f64,
    pub metric_means: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub sample_id: String,
    pub cluster: usize,
    pub ad_score: f64,
}

/// Clusters from healthiest to most severe, with names and radar data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuumReport {
    pub order: Vec<usize>,
    pub clusters: Vec<ClusterSummary>,
    pub samples: Vec<SampleScore>,
}

impl ContinuumReport {
    pub fn cluster(&self, id: usize) -> Option<&ClusterSummary> {
        self.clusters.iter().find(|c| c.cluster == id)
    }
}

pub fn order_clusters(
    assignment: &ClusterAssignment,
    scores: &[f64],
    labels: &[u8],
    metrics: &MetricTable,
) -> Result<ContinuumReport> {
    let n = assignment.labels.len();
    if scores.len() != n || labels.len() != n || metrics.n_samples() != n {
        return Err(Error::DimensionMismatch(format!(
            "assignment covers {n} samples, scores {}, labels {}, metrics {}",
            scores.len(),
            labels.len(),
            metrics.n_samples()
        )));
    }
    let mut columns = Vec::with_capacity(metrics.columns.len());
    for col in &metrics.columns {
        let values = col
            .complete()
            .ok_or_else(|| Error::MissingValues(col.name.clone()))?;
        columns.push((col.name.clone(), values));
    }

    let mut summaries = Vec::with_capacity(assignment.n_clusters);
    for cluster in 0..assignment.n_clusters {
        let members = assignment.members(cluster);
        if members.is_empty() {
            return Err(Error::DegenerateInput(format!(
                "cluster {cluster} is empty"
            )));
        }
        let size = members.len();
        let mut label_counts = [0usize; 2];
        for &i in &members {
            label_counts[labels[i] as usize] += 1;
        }
        let member_scores: Vec<f64> = members.iter().map(|&i| scores[i]).collect();
        let metric_means = columns
            .iter()
            .map(|(name, values)| {
                let mean = members.iter().map(|&i| values[i]).sum::<f64>() / size as f64;
                (name.clone(), mean)
            })
            .collect();
        summaries.push(ClusterSummary {
            cluster,
            name: String::new(),
            size,
            label_counts,
            mean_score: member_scores.iter().sum::<f64>() / size as f64,
            min_score: member_scores.iter().copied().fold(f64::INFINITY, f64::min),
            max_score: member_scores
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
            metric_means,
        });
    }
    summaries.sort_by(|a, b| {
        a.mean_score
            .total_cmp(&b.mean_score)
            .then(a.cluster.cmp(&b.cluster))
    });

    let n_mixed = summaries
        .iter()
        .filter(|s| s.label_counts[0] > 0 && s.label_counts[1] > 0)
        .count();
    let (mut cn, mut ad, mut mixed) = (0, 0, 0);
    for s in &mut summaries {
        s.name = match s.label_counts {
            [_, 0] => {
                cn += 1;
                format!("CN-{cn}")
            }
            [0, _] => {
                ad += 1;
                format!("AD-{ad}")
            }
            _ if n_mixed == 1 => "Mixed".to_string(),
            _ => {
                mixed += 1;
                format!("Mixed-{mixed}")
            }
        };
    }

    let samples = (0..n)
        .map(|i| SampleScore {
            sample_id: metrics.sample_ids[i].clone(),
            cluster: assignment.labels[i],
            ad_score: scores[i],
        })
        .collect();
    Ok(ContinuumReport {
        order: summaries.iter().map(|s| s.cluster).collect(),
        clusters: summaries,
        samples,
    })
}

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::Args;
use lava_core::continuum::{
    impute_by_class, normalize_unit, read_metric_csv, two_group_test, MetricColumn, MetricTable,
    Orientation, OrientationSpec, TestKind,
};
use lava_core::{ad_score, order_clusters, ClusterAssignment, ContinuumReport};
use serde::Serialize;

use crate::run::{csv_writer, read_text, require_file, write_json, CmdResult, Failure};

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    /// Cluster assignment CSV (`sample_id,cluster`) as written by `cluster`.
    #[arg(long)]
    pub input: PathBuf,
    /// Metric table: `sample_id,label,<metric>...`.
    #[arg(long)]
    pub metrics: PathBuf,
    /// JSON sidecar declaring each metric's orientation and the score columns.
    #[arg(long)]
    pub orientations: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Treat metric values as already scaled to [0, 1] and skip min-max
    /// scaling. Lower-is-better columns are still flipped.
    #[arg(long)]
    pub normalized: bool,
}

fn read_assignment(path: &Path, ids: &[String]) -> CmdResult<ClusterAssignment> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut by_id = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (Some(id), Some(c)) = (rec.get(0), rec.get(1)) else {
            return Err(Failure::Data(format!(
                "{}: row {} is incomplete",
                path.display(),
                row + 1
            )));
        };
        let c: usize = c.trim().parse().map_err(|_| {
            Failure::Data(format!(
                "{}: bad cluster id {c:?} on row {}",
                path.display(),
                row + 1
            ))
        })?;
        by_id.insert(id.to_string(), c);
    }
    if by_id.len() != ids.len() {
        return Err(Failure::Data(format!(
            "{} assigns {} samples, the metric table has {}",
            path.display(),
            by_id.len(),
            ids.len()
        )));
    }
    let labels: Vec<usize> = ids
        .iter()
        .map(|id| {
            by_id.get(id).copied().ok_or_else(|| {
                Failure::Data(format!(
                    "{} has no cluster for sample {id:?}",
                    path.display()
                ))
            })
        })
        .collect::<CmdResult<_>>()?;
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    if sizes.contains(&0) {
        return Err(Failure::Data(format!(
            "{}: cluster ids must run from 0 without gaps",
            path.display()
        )));
    }
    Ok(ClusterAssignment {
        labels,
        n_clusters: k,
        sizes,
    })
}

/// Flips lower-is-better columns of a table already on [0, 1].
fn orient_prescaled(table: &MetricTable) -> CmdResult<MetricTable> {
    let mut columns = Vec::with_capacity(table.columns.len());
    for col in &table.columns {
        let values = col
            .values
            .iter()
            .map(|v| {
                v.map(|x| {
                    if !(0.0..=1.0).contains(&x) {
                        return Err(Failure::Data(format!(
                            "--normalized given but column {:?} holds {x}",
                            col.name
                        )));
                    }
                    Ok(match col.orientation {
                        Orientation::HigherIsBetter => x,
                        Orientation::LowerIsBetter => 1.0 - x,
                    })
                })
                .transpose()
            })
            .collect::<CmdResult<_>>()?;
        columns.push(MetricColumn {
            name: col.name.clone(),
            orientation: Orientation::HigherIsBetter,
            values,
        });
    }
    Ok(MetricTable::new(table.sample_ids.clone(), columns)?)
}

pub fn run(args: &ScoreArgs) -> CmdResult<Vec<PathBuf>> {
    require_file(&args.orientations, "orientation sidecar")?;
    require_file(&args.metrics, "metric table")?;
    require_file(&args.input, "assignment file")?;
    let spec: OrientationSpec =
        serde_json::from_str(&read_text(&args.orientations)?).map_err(|e| {
            Failure::Usage(format!(
                "{}: bad orientation sidecar: {e}",
                args.orientations.display()
            ))
        })?;
    let file = File::open(&args.metrics)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", args.metrics.display())))?;
    let labeled =
        read_metric_csv(file, &spec).map_err(|e| Failure::from(e).with_path(&args.metrics))?;
    let assignment = read_assignment(&args.input, &labeled.table.sample_ids)?;

    let imputed = impute_by_class(&labeled.table, &labeled.labels)?;
    let normalized = if args.normalized {
        orient_prescaled(&imputed)?
    } else {
        normalize_unit(&imputed)?
    };
    let scores = ad_score(&normalized, &spec.score_columns)?;
    let report = order_clusters(&assignment, &scores, &labeled.labels, &normalized)?;

    let report_path = args.out.join("continuum.json");
    write_json(&report_path, &report)?;
    let tests_path = args.out.join("tests.csv");
    write_tests(
        &tests_path,
        &report,
        &assignment,
        &normalized,
        &labeled.labels,
    )?;
    Ok(vec![report_path, tests_path])
}

/// Each cluster against the rest: a t-test per metric and a chi-squared
/// test on the coarse label.
fn write_tests(
    path: &Path,
    report: &ContinuumReport,
    assignment: &ClusterAssignment,
    table: &MetricTable,
    labels: &[u8],
) -> CmdResult {
    let mut w = csv_writer(path)?;
    w.write_record([
        "cluster",
        "name",
        "variable",
        "test",
        "statistic",
        "df",
        "p_value",
        "note",
    ])?;
    for &c in &report.order {
        let name = report
            .cluster(c)
            .map_or_else(String::new, |s| s.name.clone());
        let inside = |i: usize| assignment.labels[i] == c;
        let mut rows: Vec<(String, TestKind, Vec<f64>, Vec<f64>)> = Vec::new();
        for col in &table.columns {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (i, v) in col.values.iter().enumerate() {
                if let Some(v) = v {
                    if inside(i) {
                        a.push(*v)
                    } else {
                        b.push(*v)
                    }
                }
            }
            rows.push((col.name.clone(), TestKind::TTest, a, b));
        }
        let (a, b): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| inside(i));
        rows.push((
            "label".into(),
            TestKind::ChiSquared,
            a.iter().map(|&i| f64::from(labels[i])).collect(),
            b.iter().map(|&i| f64::from(labels[i])).collect(),
        ));
        for (variable, kind, a, b) in rows {
            let test = match kind {
                TestKind::TTest => "t_test",
                TestKind::ChiSquared => "chi_squared",
            };
            let rec = match two_group_test(&a, &b, kind) {
                Ok(t) => [
                    c.to_string(),
                    name.clone(),
                    variable,
                    test.into(),
                    t.statistic.to_string(),
                    t.df.to_string(),
                    t.p_value.to_string(),
                    String::new(),
                ],
                Err(e) => [
                    c.to_string(),
                    name.clone(),
                    variable,
                    test.into(),
                    "NA".into(),
                    "NA".into(),
                    "NA".into(),
                    e.to_string(),
                ],
            };
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    Ok(())
}

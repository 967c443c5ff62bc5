use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherIsBetter,
    LowerIsBetter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricColumn {
    pub name: String,
    pub orientation: Orientation,
    /// `None` marks a missing observation.
    pub values: Vec<Option<f64>>,
}

impl MetricColumn {
    pub fn complete(&self) -> Option<Vec<f64>> {
        self.values.iter().copied().collect()
    }
}

/// Per-subject metrics, one column per measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub sample_ids: Vec<String>,
    pub columns: Vec<MetricColumn>,
}

impl MetricTable {
    pub fn new(sample_ids: Vec<String>, columns: Vec<MetricColumn>) -> Result<Self> {
        let n = sample_ids.len();
        let mut seen = HashSet::new();
        for c in &columns {
            if c.values.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "column {:?} has {} values for {n} samples",
                    c.name,
                    c.values.len()
                )));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::MalformedHeader(format!(
                    "column {:?} repeated",
                    c.name
                )));
            }
            if c.values.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::DegenerateInput(format!(
                    "column {:?} has a non-finite value",
                    c.name
                )));
            }
        }
        Ok(MetricTable {
            sample_ids,
            columns,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn column(&self, name: &str) -> Result<&MetricColumn> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

/// Orientation sidecar: which direction is healthier for each column, and
/// which columns feed the score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationSpec {
    pub orientations: BTreeMap<String, Orientation>,
    #[serde(default = "default_score_columns")]
    pub score_columns: Vec<String>,
}

pub fn default_score_columns() -> Vec<String> {
    ["pairs_matching", "prospective_memory", "fluid_intelligence"]
        .map(String::from)
        .to_vec()
}

/// A metric table as read from disk, with the coarse label of each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTable {
    pub table: MetricTable,
    pub labels: Vec<u8>,
}

fn is_missing(field: &str) -> bool {
    matches!(field.trim(), "" | "NA" | "NaN" | "nan" | "null")
}

/// Reads `sample_id,label,<metric>...`. Empty cells and `NA` are missing.
pub fn read_metric_csv<R: Read>(reader: R, spec: &OrientationSpec) -> Result<LabeledTable> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("sample_id") || header.get(1) != Some("label") {
        return Err(Error::MalformedHeader(
            "metric table must start with sample_id,label".into(),
        ));
    }
    let names: Vec<String> = header.iter().skip(2).map(String::from).collect();
    let mut orientations = Vec::with_capacity(names.len());
    for name in &names {
        let o = spec.orientations.get(name).ok_or_else(|| {
            Error::InvalidConfig(format!("no orientation declared for column {name:?}"))
        })?;
        orientations.push(*o);
    }
    let mut sample_ids = Vec::new();
    let mut labels = Vec::new();
    let mut values: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::DimensionMismatch(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        sample_ids.push(record[0].to_string());
        labels.push(match record[1].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::UnknownLabel {
                    row,
                    label: other.to_string(),
                })
            }
        });
        for (k, field) in record.iter().skip(2).enumerate() {
            let v = if is_missing(field) {
                None
            } else {
                Some(field.trim().parse::<f64>().map_err(|_| Error::BadValue {
                    row,
                    column: names[k].clone(),
                    value: field.to_string(),
                })?)
            };
            values[k].push(v);
        }
    }
    let columns = names
        .into_iter()
        .zip(orientations)
        .zip(values)
        .map(|((name, orientation), values)| MetricColumn {
            name,
            orientation,
            values,
        })
        .collect();
    Ok(LabeledTable {
        table: MetricTable::new(sample_ids, columns)?,
        labels,
    })
}

pub fn write_metric_csv<W: Write>(table: &LabeledTable, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["sample_id".to_string(), "label".to_string()];
    header.extend(table.table.columns.iter().map(|c| c.name.clone()));
    wtr.write_record(&header)?;
    for (i, id) in table.table.sample_ids.iter().enumerate() {
        let mut rec = vec![id.clone(), table.labels[i].to_string()];
        rec.extend(table.table.columns.iter().map(|c| match c.values[i] {
            Some(v) => format!("{v:?}"),
            None => String::new(),
        }));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Fills each missing entry with the mean of the observed entries of the
/// same coarse class in that column.
pub fn impute_by_class(table: &MetricTable, labels: &[u8]) -> Result<MetricTable> {
    let n = table.n_samples();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {n} samples",
            labels.len()
        )));
    }
    let mut columns = Vec::with_capacity(table.columns.len());
    for col in &table.columns {
        let mut sums = [0.0; 2];
        let mut counts = [0usize; 2];
        let mut needs = [false; 2];
        for (v, &l) in col.values.iter().zip(labels) {
            let l = l as usize;
            match v {
                Some(v) => {
                    sums[l] += v;
                    counts[l] += 1;
                }
                None => needs[l] = true,
            }
        }
        for class in 0..2 {
            if needs[class] && counts[class] == 0 {
                return Err(Error::AllMissingInClass {
                    column: col.name.clone(),
                    class: class as u8,
                });
            }
        }
        let values = col
            .values
            .iter()
            .zip(labels)
            .map(|(v, &l)| Some(v.unwrap_or(sums[l as usize] / counts[l as usize] as f64)))
            .collect();
        columns.push(MetricColumn {
            name: col.name.clone(),
            orientation: col.orientation,
            values,
        });
    }
    MetricTable::new(table.sample_ids.clone(), columns)
}

/// Min-max scales every column to [0, 1], then flips lower-is-better columns
/// so that 1 is always the healthier end. Constant columns become 0.5.
pub fn normalize_unit(table: &MetricTable) -> Result<MetricTable> {
    let mut columns = Vec::with_capacity(table.columns.len());
    for col in &table.columns {
        let values = col
            .complete()
            .ok_or_else(|| Error::MissingValues(col.name.clone()))?;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scaled = values
            .iter()
            .map(|&v| {
                let u = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                let u = match col.orientation {
                    Orientation::HigherIsBetter => u,
                    Orientation::LowerIsBetter => 1.0 - u,
                };
                Some(u)
            })
            .collect();
        columns.push(MetricColumn {
            name: col.name.clone(),
            orientation: Orientation::HigherIsBetter,
            values: scaled,
        });
    }
    MetricTable::new(table.sample_ids.clone(), columns)
}

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ActivationDataset, LayerActivations};
use crate::error::{Error, Result};

pub const LAVABIN_MAGIC: &[u8; 5] = b"LAVA1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Lavabin,
}

impl DatasetFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(DatasetFormat::Csv),
            "lavabin" => Some(DatasetFormat::Lavabin),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            DatasetFormat::Csv => "csv",
            DatasetFormat::Lavabin => "lavabin",
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(DatasetFormat::Csv),
            "lavabin" => Ok(DatasetFormat::Lavabin),
            other => Err(format!("unknown dataset format {other:?}")),
        }
    }
}

pub fn load_activation_dataset(path: &Path, format: DatasetFormat) -> Result<ActivationDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    match format {
        DatasetFormat::Csv => read_csv(reader),
        DatasetFormat::Lavabin => read_lavabin(reader),
    }
}

pub fn save_activation_dataset(
    dataset: &ActivationDataset,
    path: &Path,
    format: DatasetFormat,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    match format {
        DatasetFormat::Csv => write_csv(dataset, &mut writer)?,
        DatasetFormat::Lavabin => write_lavabin(dataset, &mut writer)?,
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

struct CsvLayout {
    /// (layer name, width), in column order.
    layers: Vec<(String, usize)>,
    sample_col: usize,
    label_col: usize,
    first_activation: usize,
}

fn parse_header(header: &csv::StringRecord) -> Result<CsvLayout> {
    let sample_col = header
        .iter()
        .position(|h| h == "sample_id")
        .ok_or_else(|| Error::MalformedHeader("missing sample_id column".into()))?;
    let label_col = header
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| Error::MalformedHeader("missing label column".into()))?;
    if sample_col != 0 || label_col != 1 {
        return Err(Error::MalformedHeader(
            "expected header to start with sample_id,label".into(),
        ));
    }
    let mut layers: Vec<(String, usize)> = Vec::new();
    for field in header.iter().skip(2) {
        let (layer, index) = field.rsplit_once(':').ok_or_else(|| {
            Error::MalformedHeader(format!("column {field:?} is not layer:index"))
        })?;
        let index: usize = index
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("bad neuron index in {field:?}")))?;
        if layer.is_empty() {
            return Err(Error::MalformedHeader(format!(
                "empty layer name in {field:?}"
            )));
        }
        match layers.last_mut() {
            Some((name, width)) if name == layer => {
                if index != *width {
                    return Err(Error::MalformedHeader(format!(
                        "column {field:?} out of order, expected index {width}"
                    )));
                }
                *width += 1;
            }
            _ => {
                if layers.iter().any(|(name, _)| name == layer) {
                    return Err(Error::MalformedHeader(format!(
                        "layer {layer:?} columns are not contiguous"
                    )));
                }
                if index != 0 {
                    return Err(Error::MalformedHeader(format!(
                        "layer {layer:?} must start at index 0"
                    )));
                }
                layers.push((layer.to_string(), 1));
            }
        }
    }
    if layers.is_empty() {
        return Err(Error::MalformedHeader("no activation columns".into()));
    }
    Ok(CsvLayout {
        layers,
        sample_col,
        label_col,
        first_activation: 2,
    })
}

fn parse_label(row: usize, field: &str) -> Result<u8> {
    match field.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::UnknownLabel {
            row,
            label: other.to_string(),
        }),
    }
}

/// Reads the `sample_id,label,layer:index,...` CSV layout.
pub fn read_csv<R: Read>(reader: R) -> Result<ActivationDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let layout = parse_header(&header)?;
    let total_width: usize = layout.layers.iter().map(|(_, w)| w).sum();

    let mut sample_ids = Vec::new();
    let mut labels = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let found = record.len().saturating_sub(layout.first_activation);
        if record.len() < layout.first_activation || found != total_width {
            return Err(Error::DimensionMismatch(format!(
                "row {row} has {found} activation fields, header declares {total_width}"
            )));
        }
        sample_ids.push(record[layout.sample_col].to_string());
        labels.push(parse_label(row, &record[layout.label_col])?);
        for (offset, field) in record.iter().skip(layout.first_activation).enumerate() {
            let column = || header[layout.first_activation + offset].to_string();
            let v: f64 = field.trim().parse().map_err(|_| Error::BadValue {
                row,
                column: column(),
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row,
                    column: column(),
                });
            }
            values.push(v);
        }
    }

    let n = labels.len();
    let mut layers = Vec::with_capacity(layout.layers.len());
    let mut start = 0;
    for (name, width) in &layout.layers {
        let matrix =
            Array2::from_shape_fn((n, *width), |(i, j)| values[i * total_width + start + j]);
        layers.push(LayerActivations::new(name.clone(), matrix)?);
        start += width;
    }
    ActivationDataset::new(layers, labels, sample_ids)
}

pub fn write_csv<W: Write>(dataset: &ActivationDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["sample_id".to_string(), "label".to_string()];
    for layer in dataset.layers() {
        header.extend((0..layer.width()).map(|j| format!("{}:{}", layer.layer, j)));
    }
    wtr.write_record(&header)?;
    for (i, id) in dataset.sample_ids().iter().enumerate() {
        let mut record = vec![id.clone(), dataset.labels()[i].to_string()];
        for layer in dataset.layers() {
            record.extend(layer.matrix.row(i).iter().map(|v| format!("{v:?}")));
        }
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| truncated(e, what))?;
    Ok(u32::from_le_bytes(buf))
}

fn truncated(e: std::io::Error, what: &str) -> Error {
    if e.kind() == ErrorKind::UnexpectedEof {
        Error::MalformedHeader(format!("file truncated while reading {what}"))
    } else {
        Error::Stream(e)
    }
}

/// Reads exactly `len` bytes, growing the buffer only as data arrives so a
/// corrupt length field fails on EOF instead of allocating up front.
fn read_bytes<R: Read>(reader: &mut R, len: usize) -> std::io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    reader.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() < len {
        return Err(ErrorKind::UnexpectedEof.into());
    }
    Ok(buf)
}

/// Reads the binary layout: magic `LAVA1`, then little-endian `u32 N`,
/// `u32 layer_count`, per layer a `u32`-length-prefixed UTF-8 name and a
/// `u32` width, then N label bytes, then each layer's activations as
/// row-major `f64`.
///
/// The layout carries no sample identifiers; samples are named `s0..s{N-1}`.
pub fn read_lavabin<R: Read>(mut reader: R) -> Result<ActivationDataset> {
    let mut magic = [0u8; 5];
    reader
        .read_exact(&mut magic)
        .map_err(|e| truncated(e, "magic"))?;
    if &magic != LAVABIN_MAGIC {
        return Err(Error::MalformedHeader("bad magic, expected LAVA1".into()));
    }
    let n = read_u32(&mut reader, "sample count")? as usize;
    let layer_count = read_u32(&mut reader, "layer count")? as usize;
    let mut declared = Vec::with_capacity(layer_count.min(1024));
    for _ in 0..layer_count {
        let len = read_u32(&mut reader, "layer name length")? as usize;
        let name = read_bytes(&mut reader, len).map_err(|e| truncated(e, "layer name"))?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::MalformedHeader("layer name is not UTF-8".into()))?;
        let width = read_u32(&mut reader, "layer width")? as usize;
        declared.push((name, width));
    }
    let labels = read_bytes(&mut reader, n).map_err(|e| truncated(e, "labels"))?;
    if let Some((row, l)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
        return Err(Error::UnknownLabel {
            row,
            label: l.to_string(),
        });
    }
    let mut layers = Vec::with_capacity(declared.len());
    for (name, width) in declared {
        let len = n
            .checked_mul(width)
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| Error::DimensionMismatch(format!("layer {name:?} is too large")))?;
        let bytes = read_bytes(&mut reader, len).map_err(|e| {
            if e.kind() == ErrorKind::UnexpectedEof {
                Error::DimensionMismatch(format!(
                    "layer {name:?} shorter than declared {n}x{width}"
                ))
            } else {
                Error::Stream(e)
            }
        })?;
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let matrix = Array2::from_shape_vec((n, width), values)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        layers.push(LayerActivations::new(name, matrix)?);
    }
    let mut rest = [0u8; 1];
    if reader.read(&mut rest)? != 0 {
        return Err(Error::DimensionMismatch(
            "trailing bytes after declared activations".into(),
        ));
    }
    let sample_ids = (0..n).map(|i| format!("s{i}")).collect();
    ActivationDataset::new(layers, labels, sample_ids)
}

pub fn write_lavabin<W: Write>(dataset: &ActivationDataset, mut writer: W) -> Result<()> {
    let n = u32::try_from(dataset.n_samples())
        .map_err(|_| Error::DimensionMismatch("too many samples for lavabin".into()))?;
    writer.write_all(LAVABIN_MAGIC)?;
    writer.write_all(&n.to_le_bytes())?;
    writer.write_all(&(dataset.layers().len() as u32).to_le_bytes())?;
    for layer in dataset.layers() {
        writer.write_all(&(layer.layer.len() as u32).to_le_bytes())?;
        writer.write_all(layer.layer.as_bytes())?;
        writer.write_all(&(layer.width() as u32).to_le_bytes())?;
    }
    writer.write_all(dataset.labels())?;
    for layer in dataset.layers() {
        for v in layer.matrix.iter() {
            writer.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

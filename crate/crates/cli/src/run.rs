use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use lava_core::{DatasetFormat, Error};
use serde::Serialize;

/// Why a command stopped. Usage problems exit with 2, data problems with 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    /// Prefixes the message with the file it concerns.
    pub fn with_path(self, path: &Path) -> Self {
        match self {
            Failure::Usage(m) => Failure::Usage(format!("{}: {m}", path.display())),
            Failure::Data(m) => Failure::Data(format!("{}: {m}", path.display())),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let usage = match &e {
            Error::Io { source, .. } => source.kind() == ErrorKind::NotFound,
            Error::InvalidConfig(_)
            | Error::KOutOfRange { .. }
            | Error::ROutOfRange { .. }
            | Error::SelectionTooLarge { .. }
            | Error::MissingReference
            | Error::UnsupportedFormat(_) => true,
            _ => false,
        };
        if usage {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Data(format!("csv error: {e}"))
    }
}

pub type CmdResult<T = ()> = std::result::Result<T, Failure>;

pub fn require_file(path: &Path, what: &str) -> CmdResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

pub fn require_dir(path: &Path, what: &str) -> CmdResult {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

pub fn create_dir(path: &Path) -> CmdResult {
    fs::create_dir_all(path)
        .map_err(|e| Failure::Data(format!("cannot create {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> CmdResult {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(path, text)
        .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Data(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn csv_writer(path: &Path) -> CmdResult<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    csv::Writer::from_path(path)
        .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| {
        if e.kind() == ErrorKind::NotFound {
            Failure::Usage(format!("file not found: {}", path.display()))
        } else {
            Failure::Data(format!("cannot read {}: {e}", path.display()))
        }
    })
}

/// The explicit format, or the one implied by the file extension.
pub fn dataset_format(path: &Path, explicit: Option<DatasetFormat>) -> CmdResult<DatasetFormat> {
    explicit
        .or_else(|| DatasetFormat::from_path(path))
        .ok_or_else(|| {
            Failure::Usage(format!(
                "cannot tell the format of {}; pass --format csv or --format lavabin",
                path.display()
            ))
        })
}

/// Turns a layer name into something safe to use as a file name.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

#[derive(Serialize)]
struct RunRecord<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    threads: Option<usize>,
    config: &'a C,
    outputs: &'a [String],
    /// Seconds since the Unix epoch. The only field that differs between
    /// otherwise identical runs.
    timestamp: u64,
}

/// Writes `run.json` into `out`, echoing the resolved configuration.
pub fn write_run_record<C: Serialize>(
    out: &Path,
    command: &str,
    threads: Option<usize>,
    config: &C,
    outputs: &[PathBuf],
) -> CmdResult {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let outputs: Vec<String> = outputs
        .iter()
        .map(|p| p.strip_prefix(out).unwrap_or(p).display().to_string())
        .collect();
    write_json(
        &out.join("run.json"),
        &RunRecord {
            tool: "lava",
            version: env!("CARGO_PKG_VERSION"),
            command,
            threads,
            config,
            outputs: &outputs,
            timestamp,
        },
    )
}

/// Reads `sample_id,<label>` rows. Labels may be any strings; they are
/// numbered in sorted order.
pub fn read_reference_labels(path: &Path) -> CmdResult<BTreeMap<String, usize>> {
    require_file(path, "reference label file")?;
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (Some(id), Some(label)) = (rec.get(0), rec.get(1)) else {
            return Err(Failure::Data(format!(
                "{}: row {} needs sample_id and label",
                path.display(),
                i + 1
            )));
        };
        rows.push((id.to_string(), label.trim().to_string()));
    }
    let mut names: Vec<&String> = rows.iter().map(|(_, l)| l).collect();
    names.sort();
    names.dedup();
    let code: BTreeMap<&String, usize> =
        names.into_iter().enumerate().map(|(i, l)| (l, i)).collect();
    let mut out = BTreeMap::new();
    for (id, label) in &rows {
        if out.insert(id.clone(), code[label]).is_some() {
            return Err(Failure::Data(format!(
                "{}: sample {id:?} listed twice",
                path.display()
            )));
        }
    }
    Ok(out)
}

/// Looks up one label per sample id, failing on the first id not covered.
pub fn align_labels(
    map: &BTreeMap<String, usize>,
    ids: &[String],
    source: &Path,
) -> CmdResult<Vec<usize>> {
    ids.iter()
        .map(|id| {
            map.get(id).copied().ok_or_else(|| {
                Failure::Data(format!(
                    "{} has no entry for sample {id:?}",
                    source.display()
                ))
            })
        })
        .collect()
}

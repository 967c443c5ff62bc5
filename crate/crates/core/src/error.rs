use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    // activation store
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: String },
    #[error("unparseable value {value:?} at row {row}, column {column}")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unknown label {label:?} at row {row} (expected 0 or 1)")]
    UnknownLabel { row: usize, label: String },
    #[error("duplicate sample id {0:?}")]
    DuplicateSampleId(String),
    #[error("sample order mismatch: {0}")]
    SampleOrderMismatch(String),
    #[error("unknown neuron {layer}:{index}")]
    UnknownNeuron { layer: String, index: usize },

    // probing
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("solver did not converge after {iterations} iterations (violation {violation:e})")]
    NotConverged { iterations: usize, violation: f64 },
    #[error("cannot select {requested} neurons from a layer of width {available}")]
    SelectionTooLarge { requested: usize, available: usize },
    #[error("layer mismatch: expected {expected:?}, found {found:?}")]
    LayerMismatch { expected: String, found: String },
    #[error("layer sets differ between runs: {0}")]
    LayerSetMismatch(String),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("only one label class present")]
    SingleClass,
    #[error("degenerate bandwidth: {0}")]
    DegenerateBandwidth(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // granularity
    #[error("k = {k} out of range for {n} samples")]
    KOutOfRange { k: usize, n: usize },
    #[error("cluster count {r} out of range for {n} samples")]
    ROutOfRange { r: usize, n: usize },
    #[error("calinski-harabasz index needs at least two clusters")]
    SingleCluster,
    #[error("reference labels required")]
    MissingReference,

    // morphometrics
    #[error("malformed file: {0}")]
    MalformedFile(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("mask has no vessel pixels")]
    EmptyMask,
    #[error("image {width}x{height} too small for minimum box {min_box}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min_box: usize,
    },

    // continuum
    #[error("column {column:?} has no observed value for class {class}")]
    AllMissingInClass { column: String, class: u8 },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("missing values remain in column {0:?}")]
    MissingValues(String),
    #[error("pooled variance is zero")]
    DegenerateVariance,
    #[error("expected count below 1 in contingency cell")]
    SparseCell,

    // oracles
    #[error("instance too large for brute-force oracle: {0}")]
    InstanceTooLarge(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

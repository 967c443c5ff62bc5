//! Ordering clusters along a severity continuum from per-subject metrics.

mod score;
mod stats;
mod table;

pub use crate::kde::{kde_1d, Bandwidth, DensityCurve};
pub use score::{ad_score, order_clusters, ClusterSummary, ContinuumReport, SampleScore};
pub use stats::{chi_squared_2x2, student_t_test, two_group_test, TestKind, TestResult};
pub use table::{
    default_score_columns, impute_by_class, normalize_unit, read_metric_csv, write_metric_csv,
    LabeledTable, MetricColumn, MetricTable, Orientation, OrientationSpec,
};

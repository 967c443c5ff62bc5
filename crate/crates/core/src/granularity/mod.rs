//! Sample clustering over stacked critical-neuron activations: k-NN
//! connectivity, constrained Ward agglomeration, cuts, validation indices
//! and dendrogram export.

mod dendrogram;
mod distance;
mod knn;
mod quality;
mod ward;

pub use dendrogram::{export_dendrogram, parse_dendrogram_json, DendrogramFormat};
pub use distance::{pairwise_distances, DistanceMatrix};
pub use knn::{build_knn_graph, ConnectivityGraph, KnnMode};
pub use quality::{
    adjusted_mutual_information, calinski_harabasz, cluster_quality, external_metrics,
    homogeneity_completeness_v, rand_index, ExternalMetrics, HomogeneityCompleteness,
    QualityReport,
};
pub use ward::{constrained_ward_hac, cut_tree, ward_tree, ClusterAssignment, Merge, WardTree};

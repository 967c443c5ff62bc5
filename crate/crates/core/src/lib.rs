//! Neuron-level probing, constrained Ward clustering, vessel morphometrics
//! and continuum scoring over exported classifier activations.

pub mod activation;
pub mod continuum;
pub mod error;
pub mod granularity;
pub mod kde;
pub mod morphometrics;
pub mod oracles;
pub mod probing;
pub mod synthetic;

pub use activation::{
    load_activation_dataset, save_activation_dataset, stack_critical, validate_dataset,
    ActivationDataset, DatasetFormat, LayerActivations, NeuronId, StackedMatrix,
};
pub use continuum::{ad_score, order_clusters, two_group_test, ContinuumReport, MetricTable};
pub use error::{Error, Result};
pub use granularity::{
    build_knn_graph, constrained_ward_hac, cut_tree, ClusterAssignment, ConnectivityGraph, KnnMode,
    WardTree,
};
pub use kde::{kde_1d, Bandwidth, DensityCurve};
pub use morphometrics::{fractal_dimension, load_vessel_map, vessel_density, VesselMap};
pub use probing::{
    rfe_select, sanity_check, train_epsilon_svr, CriticalNeuronSet, RfeConfig, SanityReport,
    SvrConfig, SvrModel, SvrSolver,
};
pub use synthetic::{generate_synthetic_activations, GroundTruth, SynthSpec, SyntheticData};

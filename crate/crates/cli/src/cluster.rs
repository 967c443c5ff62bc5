use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use lava_core::granularity::{
    calinski_harabasz, export_dendrogram, external_metrics, DendrogramFormat, ExternalMetrics,
};
use lava_core::{
    build_knn_graph, constrained_ward_hac, load_activation_dataset, stack_critical,
    ActivationDataset, CriticalNeuronSet, DatasetFormat, KnnMode, StackedMatrix,
};
use ndarray::{concatenate, Axis};
use serde::Serialize;

use crate::probe::read_selections;
use crate::run::{
    align_labels, csv_writer, dataset_format, read_reference_labels, require_file, write_json,
    write_text, CmdResult, Failure,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KnnModeArg {
    FeatureSpace,
    SameLabel,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    /// Activation export per fold, in the order used for probing.
    #[arg(long = "folds")]
    pub folds: Vec<PathBuf>,
    /// Probe output directory holding the per-fold selections.
    #[arg(long, requires = "folds")]
    pub selections: Option<PathBuf>,
    /// A pre-stacked matrix in activation-dataset format; every column is used.
    #[arg(long, conflicts_with_all = ["folds", "selections"])]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub format: Option<DatasetFormat>,
    /// Neighbors per sample in the connectivity graph, the sample included.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Number of clusters at which the dendrogram is cut.
    #[arg(long, default_value_t = 7)]
    pub clusters: usize,
    #[arg(long, value_enum, default_value_t = KnnModeArg::FeatureSpace)]
    pub knn_mode: KnnModeArg,
    /// CSV of `sample_id,label` used for external agreement scores.
    #[arg(long)]
    pub reference_labels: Option<PathBuf>,
}

#[derive(Serialize)]
struct Quality {
    n_samples: usize,
    n_features: usize,
    n_clusters: usize,
    cluster_sizes: Vec<usize>,
    k: usize,
    graph_sparsity: f64,
    constraint_active: bool,
    cross_component_merges: usize,
    /// Absent when the cut leaves a single cluster.
    calinski_harabasz: Option<f64>,
    external: Option<ExternalMetrics>,
}

fn load(args: &ClusterArgs, path: &Path) -> CmdResult<ActivationDataset> {
    require_file(path, "activation file")?;
    let format = dataset_format(path, args.format)?;
    load_activation_dataset(path, format).map_err(|e| Failure::from(e).with_path(path))
}

fn stacked(args: &ClusterArgs) -> CmdResult<(StackedMatrix, Vec<u8>)> {
    if let Some(path) = &args.input {
        let ds = load(args, path)?;
        let views: Vec<_> = ds.layers().iter().map(|l| l.matrix.view()).collect();
        let matrix = concatenate(Axis(1), &views).map_err(|e| Failure::Data(e.to_string()))?;
        let columns = ds
            .layers()
            .iter()
            .flat_map(|l| {
                (0..l.width()).map(|i| lava_core::activation::ColumnSource {
                    fold: l.fold,
                    neuron: lava_core::NeuronId::new(l.layer.clone(), i),
                })
            })
            .collect();
        let stack = StackedMatrix {
            matrix,
            columns,
            sample_ids: ds.sample_ids().to_vec(),
        };
        return Ok((stack, ds.labels().to_vec()));
    }
    let Some(dir) = &args.selections else {
        return Err(Failure::Usage(
            "pass --folds with --selections, or a pre-stacked --input".into(),
        ));
    };
    let datasets: Vec<ActivationDataset> = args
        .folds
        .iter()
        .map(|p| load(args, p))
        .collect::<CmdResult<_>>()?;
    let mut by_fold: BTreeMap<u32, Vec<CriticalNeuronSet>> = BTreeMap::new();
    for set in read_selections(dir)? {
        let fold = set.fold.ok_or_else(|| {
            Failure::Data(format!(
                "selection for layer {} carries no fold index",
                set.layer
            ))
        })?;
        by_fold.entry(fold).or_default().push(set);
    }
    let expected: Vec<u32> = (0..datasets.len() as u32).collect();
    if by_fold.keys().copied().collect::<Vec<_>>() != expected {
        return Err(Failure::Usage(format!(
            "selections cover folds {:?} but {} fold files were given",
            by_fold.keys().collect::<Vec<_>>(),
            datasets.len()
        )));
    }
    let selections: Vec<Vec<CriticalNeuronSet>> = by_fold.into_values().collect();
    let labels = datasets[0].labels().to_vec();
    Ok((stack_critical(&datasets, &selections)?, labels))
}

pub fn run(args: &ClusterArgs) -> CmdResult<Vec<PathBuf>> {
    let (stack, labels) = stacked(args)?;
    let x = stack.matrix.view();
    let n = x.nrows();
    let reference = match &args.reference_labels {
        Some(path) => Some(align_labels(
            &read_reference_labels(path)?,
            &stack.sample_ids,
            path,
        )?),
        None => None,
    };
    if x.ncols() == 0 {
        return Err(Failure::Data("no feature columns to cluster".into()));
    }

    let mode = match args.knn_mode {
        KnnModeArg::FeatureSpace => KnnMode::FeatureSpace,
        KnnModeArg::SameLabel => KnnMode::SameLabelOnly,
    };
    let graph = build_knn_graph(x, args.k, mode, Some(&labels))?;
    if graph.is_complete() {
        eprintln!("constraint inactive (complete graph)");
    }
    let (tree, assignment) = constrained_ward_hac(x, &graph, args.clusters)?;
    if !tree.cross_component.is_empty() {
        eprintln!(
            "warning: {} merges joined disconnected components of the graph",
            tree.cross_component.len()
        );
    }

    let mut written = Vec::new();
    let path = args.out.join("stacked_columns.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["column", "fold", "layer", "index"])?;
    for (i, c) in stack.columns.iter().enumerate() {
        w.write_record([
            i.to_string(),
            c.fold.map_or_else(String::new, |f| f.to_string()),
            c.neuron.layer.clone(),
            c.neuron.index.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    written.push(path);

    for (format, name) in [
        (DendrogramFormat::Json, "dendrogram.json"),
        (DendrogramFormat::Newick, "dendrogram.nwk"),
    ] {
        let mut text = export_dendrogram(&tree, Some(&stack.sample_ids), format)?;
        if !text.ends_with('\n') {
            text.push('\n');
        }
        let path = args.out.join(name);
        write_text(&path, &text)?;
        written.push(path);
    }

    let path = args.out.join("assignment.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["sample_id", "cluster"])?;
    for (id, c) in stack.sample_ids.iter().zip(&assignment.labels) {
        w.write_record([id.as_str(), &c.to_string()])?;
    }
    w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    written.push(path);

    let calinski_harabasz = if assignment.n_clusters >= 2 && assignment.n_clusters < n {
        Some(calinski_harabasz(x, &assignment.labels)?)
    } else {
        None
    };
    let external = match &reference {
        Some(r) => Some(external_metrics(&assignment.labels, Some(r))?),
        None => None,
    };
    let quality = Quality {
        n_samples: n,
        n_features: x.ncols(),
        n_clusters: assignment.n_clusters,
        cluster_sizes: assignment.sizes.clone(),
        k: graph.k(),
        graph_sparsity: graph.directed_sparsity(),
        constraint_active: !graph.is_complete(),
        cross_component_merges: tree.cross_component.len(),
        calinski_harabasz,
        external,
    };
    let path = args.out.join("quality.json");
    write_json(&path, &quality)?;
    written.push(path);
    Ok(written)
}

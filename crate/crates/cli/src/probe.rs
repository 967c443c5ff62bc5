use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use lava_core::probing::{
    default_bins, jaccard_matrix, mutual_information_discrete, mutual_information_kde, RfeOutcome,
};
use lava_core::{
    load_activation_dataset, rfe_select, ActivationDataset, Bandwidth, CriticalNeuronSet,
    DatasetFormat, RfeConfig, SvrConfig, SvrSolver,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::run::{
    csv_writer, dataset_format, file_stem, fmt_opt, require_file, write_json, CmdResult, Failure,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverArg {
    InteriorPoint,
    Smo,
}

impl From<SolverArg> for SvrSolver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::InteriorPoint => SvrSolver::InteriorPoint,
            SolverArg::Smo => SvrSolver::Smo,
        }
    }
}

pub fn parse_bandwidth(s: &str) -> Result<Bandwidth, String> {
    if s.eq_ignore_ascii_case("silverman") {
        return Ok(Bandwidth::Silverman);
    }
    match s.parse::<f64>() {
        Ok(h) if h > 0.0 && h.is_finite() => Ok(Bandwidth::Fixed(h)),
        _ => Err(format!(
            "expected \"silverman\" or a positive number, got {s:?}"
        )),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    /// Activation export of one cross-validation model; repeat once per fold.
    #[arg(long = "folds", visible_alias = "input", required = true)]
    pub folds: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Input format; taken from the file extension when omitted.
    #[arg(long)]
    pub format: Option<DatasetFormat>,
    /// Critical neurons kept per layer.
    #[arg(long, default_value_t = 20)]
    pub p: usize,
    /// Neurons removed per elimination round.
    #[arg(long, default_value_t = 1000)]
    pub step: usize,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = SolverArg::InteriorPoint)]
    pub solver: SolverArg,
    /// Fit on raw activations instead of z-scored columns.
    #[arg(long)]
    pub no_standardize: bool,
    /// Bins for the binned MI diagnostic; defaults to floor(sqrt(N)).
    #[arg(long)]
    pub bins: Option<usize>,
    /// KDE bandwidth for the MI diagnostic: "silverman" or a number.
    #[arg(long, default_value = "silverman", value_parser = parse_bandwidth)]
    pub bandwidth: Bandwidth,
}

impl ProbeArgs {
    fn svr(&self) -> SvrConfig {
        SvrConfig {
            c: self.c,
            epsilon: self.epsilon,
            tol: self.tol,
            max_iter: self.max_iter,
            standardize: !self.no_standardize,
            solver: self.solver.into(),
            ..SvrConfig::default()
        }
    }
}

pub fn selection_path(out: &Path, fold: u32, layer: &str) -> PathBuf {
    out.join("selections")
        .join(format!("fold{fold}"))
        .join(format!("{}.json", file_stem(layer)))
}

pub fn run(args: &ProbeArgs) -> CmdResult<Vec<PathBuf>> {
    for path in &args.folds {
        require_file(path, "fold file")?;
    }
    let svr = args.svr();
    svr.validate()?;
    let rfe = RfeConfig {
        n_select: args.p,
        step: args.step,
    };
    if rfe.step == 0 {
        return Err(Failure::Usage("--step must be positive".into()));
    }

    let datasets: Vec<ActivationDataset> = args
        .folds
        .iter()
        .enumerate()
        .map(|(f, path)| {
            let format = dataset_format(path, args.format)?;
            let ds = load_activation_dataset(path, format)
                .map_err(|e| Failure::from(e).with_path(path))?;
            Ok(ds.with_fold(f as u32))
        })
        .collect::<CmdResult<_>>()?;
    let layer_names: Vec<String> = datasets[0]
        .layers()
        .iter()
        .map(|l| l.layer.clone())
        .collect();
    for (f, ds) in datasets.iter().enumerate() {
        let names: Vec<&String> = ds.layers().iter().map(|l| &l.layer).collect();
        if names.len() != layer_names.len() || names.iter().zip(&layer_names).any(|(a, b)| *a != b)
        {
            return Err(Failure::Data(format!(
                "fold {f} ({}) has layers {names:?}, fold 0 has {layer_names:?}",
                args.folds[f].display()
            )));
        }
    }

    let jobs: Vec<(usize, usize)> = (0..datasets.len())
        .flat_map(|f| (0..layer_names.len()).map(move |l| (f, l)))
        .collect();
    let outcomes: Vec<RfeOutcome> = jobs
        .par_iter()
        .map(|&(f, l)| {
            let ds = &datasets[f];
            rfe_select(&ds.layers()[l], ds.labels(), &svr, &rfe).map_err(Failure::from)
        })
        .collect::<CmdResult<_>>()?;
    for o in &outcomes {
        for w in o.warnings() {
            eprintln!("warning: fold {}: {w}", o.selection.fold.unwrap_or(0));
        }
    }

    let mut written = Vec::new();
    for o in &outcomes {
        let path = selection_path(&args.out, o.selection.fold.unwrap_or(0), &o.selection.layer);
        write_json(&path, &o.selection)?;
        written.push(path);
    }
    written.push(write_rounds(&args.out, &outcomes)?);
    written.extend(write_jaccard(&args.out, &layer_names, &outcomes)?);
    written.push(write_mi(args, &datasets, &outcomes)?);
    Ok(written)
}

fn write_rounds(out: &Path, outcomes: &[RfeOutcome]) -> CmdResult<PathBuf> {
    let path = out.join("rfe_rounds.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "fold",
        "layer",
        "fit",
        "survivors",
        "removed",
        "converged",
        "iterations",
    ])?;
    for o in outcomes {
        let fold = o.selection.fold.unwrap_or(0).to_string();
        for (i, r) in o.rounds.iter().enumerate() {
            w.write_record([
                fold.as_str(),
                &o.selection.layer,
                &i.to_string(),
                &r.survivors.to_string(),
                &r.removed.to_string(),
                &r.converged.to_string(),
                &r.iterations.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    Ok(path)
}

#[derive(Serialize)]
struct JaccardDoc<'a> {
    layer: &'a str,
    folds: Vec<u32>,
    matrix: Vec<Vec<f64>>,
}

fn write_jaccard(
    out: &Path,
    layers: &[String],
    outcomes: &[RfeOutcome],
) -> CmdResult<Vec<PathBuf>> {
    let mut by_layer: BTreeMap<&str, Vec<CriticalNeuronSet>> = BTreeMap::new();
    for o in outcomes {
        by_layer
            .entry(&o.selection.layer)
            .or_default()
            .push(o.selection.clone());
    }
    let mut written = Vec::new();
    for layer in layers {
        let sets = &by_layer[layer.as_str()];
        let folds: Vec<u32> = sets.iter().map(|s| s.fold.unwrap_or(0)).collect();
        let matrix = jaccard_matrix(sets);
        let stem = out.join("jaccard").join(file_stem(layer));
        let json = stem.with_extension("json");
        write_json(
            &json,
            &JaccardDoc {
                layer,
                folds: folds.clone(),
                matrix: matrix.clone(),
            },
        )?;
        let csv_path = stem.with_extension("csv");
        let mut w = csv_writer(&csv_path)?;
        let mut header = vec!["fold".to_string()];
        header.extend(folds.iter().map(|f| format!("fold{f}")));
        w.write_record(&header)?;
        for (f, row) in folds.iter().zip(&matrix) {
            let mut rec = vec![format!("fold{f}")];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Failure::Data(e.to_string()))?;
        written.push(json);
        written.push(csv_path);
    }
    Ok(written)
}

/// Mutual information between each selected neuron and the label, as a
/// diagnostic next to the SVR ranking.
fn write_mi(
    args: &ProbeArgs,
    datasets: &[ActivationDataset],
    outcomes: &[RfeOutcome],
) -> CmdResult<PathBuf> {
    let path = args.out.join("mi.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "fold",
        "layer",
        "index",
        "rank",
        "svr_score",
        "mi_binned_bits",
        "mi_kde_bits",
    ])?;
    for o in outcomes {
        let fold = o.selection.fold.unwrap_or(0);
        let ds = &datasets[fold as usize];
        let layer = ds
            .layer(&o.selection.layer)
            .ok_or_else(|| Failure::Data(format!("layer {} vanished", o.selection.layer)))?;
        let bins = args.bins.unwrap_or_else(|| default_bins(ds.n_samples()));
        for n in &o.selection.neurons {
            let z = layer.column(n.neuron.index).to_vec();
            let binned = mutual_information_discrete(&z, ds.labels(), bins)
                .ok()
                .map(|m| m.value_bits);
            let kde = mutual_information_kde(&z, ds.labels(), args.bandwidth)
                .ok()
                .map(|m| m.value_bits);
            w.write_record([
                fold.to_string(),
                o.selection.layer.clone(),
                n.neuron.index.to_string(),
                n.rank.to_string(),
                n.score.to_string(),
                fmt_opt(binned),
                fmt_opt(kde),
            ])?;
        }
    }
    w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    Ok(path)
}

/// Loads every selection file below `dir` (or below `dir/selections` when
/// that exists), in path order.
pub fn read_selections(dir: &Path) -> CmdResult<Vec<CriticalNeuronSet>> {
    let root = if dir.join("selections").is_dir() {
        dir.join("selections")
    } else {
        dir.to_path_buf()
    };
    if !root.is_dir() {
        return Err(Failure::Usage(format!(
            "selection directory not found: {}",
            dir.display()
        )));
    }
    let mut files = Vec::new();
    collect_json(&root, &mut files)?;
    files.sort();
    if files.is_empty() {
        return Err(Failure::Data(format!(
            "no selection files under {}",
            root.display()
        )));
    }
    files
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::Data(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Data(format!("{}: not a selection file: {e}", p.display())))
        })
        .collect()
}

fn collect_json(dir: &Path, out: &mut Vec<PathBuf>) -> CmdResult {
    let entries = fs::read_dir(dir)
        .map_err(|e| Failure::Data(format!("cannot list {}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry.map_err(|e| Failure::Data(e.to_string()))?.path();
        if path.is_dir() {
            collect_json(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    Ok(())
}

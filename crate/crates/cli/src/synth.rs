use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use lava_core::continuum::{Orientation, OrientationSpec};
use lava_core::{
    generate_synthetic_activations, save_activation_dataset, ActivationDataset, DatasetFormat,
    SynthSpec,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::run::{csv_writer, write_json, CmdResult, Failure};

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub n_per_subgroup: usize,
    #[arg(long, default_value_t = 3)]
    pub subgroups_per_class: usize,
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    #[arg(long, default_value_t = 100)]
    pub width: usize,
    #[arg(long, default_value_t = 3)]
    pub informative: usize,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value = "csv")]
    pub format: DatasetFormat,
    /// Also write a copy whose labels are permuted, standing in for the
    /// export of a model with randomized parameters.
    #[arg(long)]
    pub shuffled_copy: bool,
}

/// Cognitive-style columns where class 1 scores worse on average.
const METRICS: [(&str, Orientation, f64, f64); 3] = [
    ("pairs_matching", Orientation::LowerIsBetter, 3.0, 5.0),
    ("prospective_memory", Orientation::HigherIsBetter, 0.9, 0.6),
    ("fluid_intelligence", Orientation::HigherIsBetter, 7.0, 5.0),
];

pub fn run(args: &SynthArgs) -> CmdResult<Vec<PathBuf>> {
    let spec = SynthSpec {
        n_per_subgroup: args.n_per_subgroup,
        subgroups_per_class: args.subgroups_per_class,
        n_layers: args.layers,
        layer_width: args.width,
        n_informative: args.informative,
        noise_sigma: args.noise,
        seed: args.seed,
    };
    let data = generate_synthetic_activations(&spec)?;
    let mut written = Vec::new();
    let ext = args.format.extension();

    let path = args.out.join(format!("activations.{ext}"));
    crate::run::create_dir(&args.out)?;
    save_activation_dataset(&data.dataset, &path, args.format)?;
    written.push(path);

    let path = args.out.join("truth.json");
    write_json(&path, &data.truth)?;
    written.push(path);

    let path = args.out.join("subgroups.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["sample_id", "subgroup"])?;
    for (id, s) in data.dataset.sample_ids().iter().zip(&data.truth.subgroups) {
        w.write_record([id.as_str(), &s.to_string()])?;
    }
    w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    written.push(path);

    // seeded separately from the activations so adding outputs never
    // changes existing ones
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x6d65_7472_6963);
    let path = args.out.join("metrics.csv");
    let mut w = csv_writer(&path)?;
    let mut header = vec!["sample_id", "label"];
    header.extend(METRICS.iter().map(|m| m.0));
    w.write_record(&header)?;
    for (id, &label) in data.dataset.sample_ids().iter().zip(data.dataset.labels()) {
        let mut rec = vec![id.clone(), label.to_string()];
        for (_, _, healthy, affected) in METRICS {
            let mean = if label == 0 { healthy } else { affected };
            let sd = (healthy - affected).abs() / 2.0;
            let v = Normal::new(mean, sd)
                .map_err(|e| Failure::Data(e.to_string()))?
                .sample(&mut rng);
            rec.push(v.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    written.push(path);

    let path = args.out.join("orientations.json");
    let orientations: BTreeMap<String, Orientation> =
        METRICS.iter().map(|m| (m.0.to_string(), m.1)).collect();
    write_json(
        &path,
        &OrientationSpec {
            orientations,
            score_columns: METRICS.iter().map(|m| m.0.to_string()).collect(),
        },
    )?;
    written.push(path);

    if args.shuffled_copy {
        let mut labels = data.dataset.labels().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x7368_7566);
        labels.shuffle(&mut rng);
        let shuffled = ActivationDataset::new(
            data.dataset.layers().to_vec(),
            labels,
            data.dataset.sample_ids().to_vec(),
        )?;
        let path = args.out.join(format!("activations_shuffled.{ext}"));
        save_activation_dataset(&shuffled, &path, args.format)?;
        written.push(path);
    }
    Ok(written)
}

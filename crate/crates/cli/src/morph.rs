use std::fs;
use std::path::PathBuf;

use clap::Args;
use lava_core::morphometrics::{MaskFormat, DEFAULT_MIN_BOX};
use lava_core::{fractal_dimension, load_vessel_map, vessel_density};
use rayon::prelude::*;
use serde::Serialize;

use crate::run::{csv_writer, require_dir, CmdResult, Failure};

#[derive(Debug, Clone, Args, Serialize)]
pub struct MorphArgs {
    /// Directory of vessel masks (.pgm, .lmsk).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Smallest box side used by the box-counting fit.
    #[arg(long, default_value_t = DEFAULT_MIN_BOX)]
    pub min_box: usize,
}

struct Row {
    sample_id: String,
    density: f64,
    dimension: f64,
    r2: f64,
}

pub fn run(args: &MorphArgs) -> CmdResult<Vec<PathBuf>> {
    require_dir(&args.input, "mask directory")?;
    if args.min_box == 0 {
        return Err(Failure::Usage("--min-box must be positive".into()));
    }
    let entries = fs::read_dir(&args.input)
        .map_err(|e| Failure::Data(format!("cannot list {}: {e}", args.input.display())))?;
    let mut files: Vec<(PathBuf, MaskFormat)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Failure::Data(e.to_string()))?.path();
        if path.is_file() {
            if let Some(format) = MaskFormat::from_path(&path) {
                files.push((path, format));
            }
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    if files.is_empty() {
        return Err(Failure::Data(format!(
            "no inputs: {} holds no .pgm or .lmsk masks",
            args.input.display()
        )));
    }

    let results: Vec<Result<Row, String>> = files
        .par_iter()
        .map(|(path, format)| {
            let map = load_vessel_map(path, *format).map_err(|e| e.to_string())?;
            let series = fractal_dimension(&map, args.min_box).map_err(|e| e.to_string())?;
            let sample_id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(Row {
                sample_id,
                density: vessel_density(&map),
                dimension: series.fitted_dimension,
                r2: series.r2,
            })
        })
        .collect();

    let table = args.out.join("morphometrics.csv");
    let failures = args.out.join("failures.csv");
    let mut w = csv_writer(&table)?;
    w.write_record(["sample_id", "vessel_density", "fractal_dimension", "r2"])?;
    let mut f = csv_writer(&failures)?;
    f.write_record(["file", "error"])?;
    let mut ok = 0;
    for ((path, _), result) in files.iter().zip(&results) {
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        match result {
            Ok(r) => {
                ok += 1;
                w.write_record([
                    r.sample_id.clone(),
                    r.density.to_string(),
                    r.dimension.to_string(),
                    r.r2.to_string(),
                ])?;
            }
            Err(e) => {
                eprintln!("failed: {name}: {e}");
                f.write_record([name.as_str(), e.as_str()])?;
            }
        }
    }
    w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    f.flush().map_err(|e| Failure::Data(e.to_string()))?;
    eprintln!(
        "{ok} of {} masks measured, {} failed",
        files.len(),
        files.len() - ok
    );
    if ok == 0 {
        return Err(Failure::Data("every mask failed".into()));
    }
    Ok(vec![table, failures])
}

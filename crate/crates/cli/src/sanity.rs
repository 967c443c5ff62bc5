use std::path::PathBuf;

use clap::Args;
use lava_core::probing::sanity_check;
use serde::Serialize;

use crate::probe::read_selections;
use crate::run::{write_json, write_text, CmdResult};

#[derive(Debug, Clone, Args, Serialize)]
pub struct SanityArgs {
    /// Probe output directory for the trained model.
    #[arg(long)]
    pub trained: PathBuf,
    /// Probe output directory for the model with randomized parameters.
    #[arg(long)]
    pub randomized: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SanityArgs) -> CmdResult<Vec<PathBuf>> {
    let trained = read_selections(&args.trained)?;
    let randomized = read_selections(&args.randomized)?;
    let report = sanity_check(&trained, &randomized)?;
    println!("{report}");
    let json = args.out.join("sanity.json");
    write_json(&json, &report)?;
    let text = args.out.join("sanity.txt");
    write_text(&text, &format!("{report}\n"))?;
    Ok(vec![json, text])
}

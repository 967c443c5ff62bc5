//! `lava`: critical-neuron probing, constrained clustering, vessel
//! morphometrics and continuum scoring from the command line.

mod cluster;
mod morph;
mod probe;
mod run;
mod sanity;
mod score;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use run::{write_run_record, CmdResult, Failure};

#[derive(Debug, Parser)]
#[command(name = "lava", version, about)]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "LAVA_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select critical neurons per fold and layer with SVR-driven RFE.
    Probe(probe::ProbeArgs),
    /// Stack selections, build the k-NN graph and cut the Ward tree.
    Cluster(cluster::ClusterArgs),
    /// Vessel density and box-counting dimension for a directory of masks.
    Morph(morph::MorphArgs),
    /// Order clusters along the continuum from per-subject metrics.
    Score(score::ScoreArgs),
    /// Compare selections of a trained and a randomized model.
    Sanity(sanity::SanityArgs),
    /// Write a seeded synthetic dataset with planted subgroups.
    Synth(synth::SynthArgs),
}

fn execute(cli: &Cli) -> CmdResult {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage(
                "LAVA_THREADS / --threads must be positive".into(),
            ));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot size thread pool: {e}")))?;
    }
    let (name, out, outputs) = match &cli.command {
        Command::Probe(a) => ("probe", &a.out, probe::run(a)?),
        Command::Cluster(a) => ("cluster", &a.out, cluster::run(a)?),
        Command::Morph(a) => ("morph", &a.out, morph::run(a)?),
        Command::Score(a) => ("score", &a.out, score::run(a)?),
        Command::Sanity(a) => ("sanity", &a.out, sanity::run(a)?),
        Command::Synth(a) => ("synth", &a.out, synth::run(a)?),
    };
    match &cli.command {
        Command::Probe(a) => write_run_record(out, name, cli.threads, a, &outputs),
        Command::Cluster(a) => write_run_record(out, name, cli.threads, a, &outputs),
        Command::Morph(a) => write_run_record(out, name, cli.threads, a, &outputs),
        Command::Score(a) => write_run_record(out, name, cli.threads, a, &outputs),
        Command::Sanity(a) => write_run_record(out, name, cli.threads, a, &outputs),
        Command::Synth(a) => write_run_record(out, name, cli.threads, a, &outputs),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

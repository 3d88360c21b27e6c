//! `ssc`: describe shapes, compare them, build cost matrices, score
//! retrieval and generate synthetic datasets.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::PipelineArgs;

#[derive(Debug, Parser)]
#[command(name = "ssc", version, about = "Solid shape context retrieval toolkit")]
struct Cli {
    /// Flat key = value file; command-line flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one descriptor JSON per manifest shape.
    Describe {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Compare two silhouette images and print their costs as JSON.
    Match {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Build the pairwise cost matrix of a manifest as CSV.
    Matrix {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
        /// Read `<id>.ssc.json` / `<id>.idsc.json` from here instead of
        /// describing the images.
        #[arg(long)]
        descriptors: Option<PathBuf>,
        /// Precomputed IDSC cost matrix used in place of IDSC descriptors.
        #[arg(long)]
        idsc_matrix: Option<PathBuf>,
        /// Keep complete rows already in `--out` and compute the rest.
        #[arg(long)]
        resume: bool,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Score a cost matrix: bullseye, top-k, first wrong position, PR curve.
    Evaluate {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Report JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// PR curve CSV (defaults to the report path with `.pr.csv`).
        #[arg(long)]
        pr: Option<PathBuf>,
        /// Treat the matrix as similarities (larger = closer).
        #[arg(long)]
        similarity: bool,
        /// Do not count the query among its own retrievals.
        #[arg(long)]
        exclude_self: bool,
        #[arg(long, default_value_t = 20)]
        top_k: usize,
        #[arg(long, default_value_t = ssc_core::retrieval::BULLSEYE_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = ssc_core::retrieval::BULLSEYE_CLASS_SIZE)]
        class_size: usize,
    },
    /// Render synthetic silhouettes plus a manifest.
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// JSON list of {id, class, spec} entries, or a single spec. Without
        /// it the 5-class benchmark is generated.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Benchmark shapes per class.
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        /// Benchmark seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

//! Batch command-line surface: curation, generation, refinement,
//! evaluation, and slice previews over reproducible manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

use error::CmdError;

#[derive(Parser, Debug)]
#[command(
    name = "lesionforge",
    about = "Procedural synthetic CT lesion generation and evaluation",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify template scans (range, contrast, healthy organs) and build
    /// the curated pool manifest.
    Curate {
        /// Input manifest: one JSON record per line with scan_id, volume,
        /// labels, impression.
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory for standardized volumes and curated.jsonl.
        #[arg(long)]
        out: PathBuf,
        /// Keyword/structure-label configuration (JSON); defaults ship in.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Synthesize lesion samples from a curated template pool.
    Generate {
        /// Generation configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Curated manifest produced by `curate`.
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Global seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker count (overrides the config).
        #[arg(long)]
        workers: Option<usize>,
        /// Output grid edge in voxels; 0 keeps whole template volumes
        /// (overrides the config).
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Run diffusion-style refinement over generated samples.
    Refine {
        /// Batch manifest produced by `generate`.
        #[arg(long)]
        manifest: PathBuf,
        /// Predictor: `oracle`, `zero`, `smooth`, or `external:<command>`.
        #[arg(long)]
        predictor: String,
        /// Refinement configuration (JSON); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Path for the updated manifest (default: alongside the input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize per-case results with bootstrap CIs and comparison tests.
    Eval {
        /// Results CSV: case_id,model_id,value or case_id,model_id,score,label.
        #[arg(long)]
        results: PathBuf,
        /// Comparison test between the top and second model.
        #[arg(long, value_parser = ["wilcoxon", "permutation"])]
        test: Option<String>,
        /// Bootstrap replicates.
        #[arg(long, default_value_t = 1000)]
        bootstrap: usize,
        /// Confidence level.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Permutation count for the permutation test.
        #[arg(long, default_value_t = 10_000)]
        permutations: usize,
        /// Seed for bootstrap/permutation resampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for summary.csv / comparison.csv / summary.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write axial/coronal/sagittal mid-lesion slices with contour overlay.
    Preview {
        /// Batch manifest produced by `generate`.
        #[arg(long)]
        manifest: PathBuf,
        /// Sample id to preview.
        #[arg(long)]
        sample: String,
        /// Output directory for the three PNG slices.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Dispatch a parsed command. Errors carry their process exit code.
pub fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Curate {
            manifest,
            out,
            config,
        } => commands::curate::run(&manifest, &out, config.as_deref()),
        Command::Generate {
            config,
            manifest,
            out,
            seed,
            workers,
            grid,
        } => commands::generate::run(&config, &manifest, out, seed, workers, grid),
        Command::Refine {
            manifest,
            predictor,
            config,
            seed,
            out,
        } => commands::refine::run(&manifest, &predictor, config.as_deref(), seed, out),
        Command::Eval {
            results,
            test,
            bootstrap,
            level,
            permutations,
            seed,
            out,
        } => commands::eval::run(&results, test.as_deref(), bootstrap, level, permutations, seed, &out),
        Command::Preview {
            manifest,
            sample,
            out,
        } => commands::preview::run(&manifest, &sample, &out),
    }
}

//! `bimi-lab`: experiments on noisy similarity rewards for
//! instruction-following agents.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bimi_lab::cli::{cmd_calibrate, cmd_eval, cmd_noise_probe, cmd_theory, cmd_train, ExperimentManifest};

#[derive(Parser)]
#[command(name = "bimi-lab", version, about = "Noisy-reward instruction-following RL laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ManifestArgs {
    /// Experiment manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Override the manifest's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed (calibration seed, or a single training seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the conformal gate threshold from held-out solver trajectories.
    Calibrate(ManifestArgs),
    /// Score matched/mismatched/manipulated pairs and tabulate per class.
    NoiseProbe(ManifestArgs),
    /// Train the full experiment matrix (variants x seeds).
    Train(ManifestArgs),
    /// Aggregate finished runs into a comparison table.
    Eval {
        #[command(flatten)]
        args: ManifestArgs,
        /// Baseline variant for the percentage column.
        #[arg(long)]
        baseline: Option<String>,
    },
    /// Run the numerical verification suite for the theoretical claims.
    Theory {
        /// Suite seed.
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> bimi_lab::Result<()> {
    match Cli::parse().command {
        Command::Calibrate(a) => {
            let loaded = ExperimentManifest::load(&a.manifest)?;
            cmd_calibrate(&loaded, a.out.as_deref(), a.seed)
        }
        Command::NoiseProbe(a) => {
            let loaded = ExperimentManifest::load(&a.manifest)?;
            cmd_noise_probe(&loaded, a.out.as_deref(), a.seed)
        }
        Command::Train(a) => {
            let loaded = ExperimentManifest::load(&a.manifest)?;
            cmd_train(&loaded, a.out.as_deref(), a.seed)
        }
        Command::Eval { args, baseline } => {
            let loaded = ExperimentManifest::load(&args.manifest)?;
            cmd_eval(&loaded, args.out.as_deref(), baseline.as_deref())
        }
        Command::Theory { seed, out } => cmd_theory(seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ConfigError;

/// Lung-field segmentation of chest X-rays with a conditional GAN.
#[derive(Parser, Debug)]
#[command(author, version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

/// Flags every command accepts.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML file of `key = value` settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (or file, for `predict`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic image/mask dataset.
    Synth(commands::synth::SynthArgs),
    /// Train a model, writing checkpoints, history and the resolved config.
    Train(commands::train::TrainArgs),
    /// Score a checkpoint on a dataset and write metric reports.
    Eval(commands::eval::EvalArgs),
    /// Segment one image.
    Predict(commands::predict::PredictArgs),
    /// Histograms and augmentation previews for an image and optional mask.
    Inspect(commands::inspect::InspectArgs),
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_DIVERGED: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    use lungfield::Error as E;
    if err.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    match err.downcast_ref::<E>() {
        Some(E::Config(_) | E::Checkpoint(_) | E::FingerprintMismatch { .. }) => EXIT_CONFIG,
        Some(
            E::Decode { .. }
            | E::NoPairs { .. }
            | E::DuplicateStem { .. }
            | E::NonBinaryMask(_)
            | E::ExtentMismatch(..)
            | E::Empty(_)
            | E::Csv(_),
        ) => EXIT_DATA,
        Some(E::Diverged { .. }) => EXIT_DIVERGED,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth::run(a, &cli.common),
        Command::Train(a) => commands::train::run(a, &cli.common),
        Command::Eval(a) => commands::eval::run(a, &cli.common),
        Command::Predict(a) => commands::predict::run(a, &cli.common),
        Command::Inspect(a) => commands::inspect::run(a, &cli.common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if let Some(lungfield::Error::NoPairs { unpaired_images }) = err.downcast_ref() {
                for stem in unpaired_images.iter().take(20) {
                    eprintln!("  unpaired: {stem}");
                }
                if unpaired_images.len() > 20 {
                    eprintln!("  ... and {} more", unpaired_images.len() - 20);
                }
            }
            ExitCode::from(exit_code(&err))
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cropforge::pipeline::{self, PipelineConfig, RawConfig};

/// GAN-based shape and style augmentation for multispectral crop/weed
/// segmentation datasets.
#[derive(Parser)]
#[command(name = "cropforge", version)]
struct Cli {
    /// Configuration file (key = value lines with dotted keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. --set shape_gan.steps=100 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Print the fully resolved configuration and exit.
    #[arg(long, global = true)]
    emit_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the train/val/test split and the GAN training caches.
    Prepare,
    /// Train the silhouette GAN on the cached blurred crop masks.
    TrainShape,
    /// Train the mask-conditioned texture GAN on the cached patch pairs.
    TrainStyle,
    /// Compose the GAN-backed dataset variants (shape_style, synthetic, style).
    Compose,
    /// Build the classical baseline variants (basic, texture).
    AugmentBaseline,
    /// Train one segmentation model per variant and emit the comparison table.
    Eval,
    /// Re-emit the comparison table from the stored results.
    Report,
}

fn run(cli: &Cli) -> cropforge::Result<()> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::defaults(),
    };
    raw.apply_overrides(&cli.overrides)?;
    if cli.emit_config {
        print!("{}", raw.emit());
        return Ok(());
    }
    let config = PipelineConfig::from_raw(&raw)?;
    match cli.command {
        Command::Prepare => pipeline::cmd_prepare(&config),
        Command::TrainShape => pipeline::cmd_train_shape(&config),
        Command::TrainStyle => pipeline::cmd_train_style(&config),
        Command::Compose => pipeline::cmd_compose(&config),
        Command::AugmentBaseline => pipeline::cmd_augment_baseline(&config),
        Command::Eval => pipeline::cmd_eval(&config),
        Command::Report => pipeline::cmd_report(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

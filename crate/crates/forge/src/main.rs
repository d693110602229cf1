use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mugenforge::pipeline::{self, Summary, UsageError};

/// Generate, render and analyze Mugen gameplay episodes.
#[derive(Debug, Parser)]
#[command(name = "mugenforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate levels and play them, writing one episode file per seed.
    Gen(pipeline::GenArgs),
    /// Render RGB frames and semantic maps.
    Render(pipeline::RenderArgs),
    /// Synthesize soundtracks.
    Audio(pipeline::AudioArgs),
    /// Write template captions.
    Autotext(pipeline::AutotextArgs),
    /// Cut episodes into clips and assign train/val/test splits.
    DatasetSplit(pipeline::SplitArgs),
    /// Occurrence counts and location/temporal heatmaps.
    Stats(pipeline::StatsArgs),
    /// Re-simulate episodes and compare against their recorded frames.
    Verify(pipeline::VerifyArgs),
    /// Retrieval metrics from similarity matrices and embeddings.
    Metrics(pipeline::MetricsArgs),
}

fn run(cmd: &Command) -> anyhow::Result<Summary> {
    match cmd {
        Command::Gen(a) => pipeline::gen(a),
        Command::Render(a) => pipeline::render(a),
        Command::Audio(a) => pipeline::audio(a),
        Command::Autotext(a) => pipeline::autotext(a),
        Command::DatasetSplit(a) => pipeline::dataset_split(a),
        Command::Stats(a) => pipeline::stats(a),
        Command::Verify(a) => pipeline::verify(a),
        Command::Metrics(a) => pipeline::metrics(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(s) => {
            println!("{}", s.report);
            for (item, err) in &s.failures {
                eprintln!("failed: {item}: {err}");
            }
            if s.ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

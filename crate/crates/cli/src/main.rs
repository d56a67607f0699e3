//! `c3`: corpus preparation, autoencoder training, coded-word detection,
//! latent-space analyses, evaluation and plotting.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 when the inputs or
//! the configuration are unusable. Results and written paths go to stdout,
//! diagnostics to stderr.

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "c3", version, about = "Coded-word detection with sequence autoencoders")]
struct Cli {
    /// Seed for every random choice; falls back to the config file, then C3_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML config with optional [model], [detector], [train] and [analysis] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split a labelled corpus into train, validation, test and profile files.
    Prepare(commands::corpus::PrepareArgs),
    /// Generate a seeded synthetic corpus with planted coded words.
    Synth(commands::corpus::SynthArgs),
    /// Train an autoencoder on a prepared corpus.
    Train(commands::model::TrainArgs),
    /// Build per-class mean latent vectors from the profile documents.
    Profile(commands::model::ProfileArgs),
    /// Classify documents and extend the coded-word dictionary.
    Detect(commands::model::DetectArgs),
    /// Flag words whose latent distance falls outside a class's band.
    NewWords(commands::analysis::NewWordsArgs),
    /// Words shared by two class dictionaries and the documents mixing them.
    Overlap(commands::analysis::OverlapArgs),
    /// Cluster a class's dictionary words into categories.
    Taxonomy(commands::analysis::TaxonomyArgs),
    /// Run a mixture experiment and write metric tables.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Project latent vectors to 2-D and draw a scatter plot.
    Plot(commands::analysis::PlotArgs),
    /// Sweep the similarity threshold on labelled documents.
    CalibrateTheta(commands::model::CalibrateArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command, cli.seed, cli.config.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

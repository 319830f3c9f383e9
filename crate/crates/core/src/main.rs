use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stormtopics::config::{ConfigLayer, RunConfig};

mod commands;

/// Topic modeling for short-message corpora.
#[derive(Parser)]
#[command(name = "stormtopics", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, clap::Args)]
struct Shared {
    /// Flat TOML file of settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    layer: ConfigLayer,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize and filter JSONL messages into a corpus archive.
    Ingest(Shared),
    /// Fit a topic model to a corpus archive.
    Train(Shared),
    /// Fit a grid of topic counts and pick one by held-out perplexity.
    Sweep(Shared),
    /// Write keyword tables, prevalence and figure data for a fitted model.
    Report(Shared),
    /// Generate a corpus from random planted topics.
    Simulate(Shared),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let (run, shared): (fn(&RunConfig) -> stormtopics::Result<()>, Shared) = match cli.command {
        Command::Ingest(s) => (commands::ingest, s),
        Command::Train(s) => (commands::train, s),
        Command::Sweep(s) => (commands::sweep, s),
        Command::Report(s) => (commands::report, s),
        Command::Simulate(s) => (commands::simulate, s),
    };
    let result = shared
        .config
        .as_deref()
        .map(ConfigLayer::from_file)
        .transpose()
        .and_then(|file| {
            let cfg = RunConfig::resolve(file.unwrap_or_default(), shared.layer);
            commands::prepare(&cfg)?;
            run(&cfg)
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

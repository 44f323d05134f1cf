//! `mocomr` command-line interface.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use mocomr_cli::config::PipelineConfig;
use mocomr_cli::export::{export_data, Format, What};
use mocomr_cli::pipeline::{
    gen_corpus, predict_for_group, run_pipeline, write_sociograms, Stage,
};
use mocomr_cli::verbs::verb_table;

#[derive(Parser)]
#[command(
    name = "mocomr",
    about = "Behavior clustering, synthetic group simulation, and fidelity analysis for collaborative MR interaction logs",
    version
)]
struct Cli {
    /// Path to a pipeline config JSON file (defaults are used if omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic reference corpus from the built-in archetypes.
    GenCorpus,
    /// Fit per-modality mixture models and assign behavior clusters.
    Fit,
    /// Simulate one synthetic session per corpus group from fitted models.
    Simulate,
    /// Compare simulated sessions against the corpus (features, graphs, forest).
    Evaluate,
    /// Run fit, simulate, and evaluate in sequence.
    All,
    /// Write DOT sociograms for every corpus session.
    Sociogram,
    /// Predict task metrics for one group from the trained forest.
    PredictTask {
        /// Group id, e.g. g03.
        #[arg(long)]
        group: String,
    },
    /// Export data in interchange formats.
    Export {
        #[arg(long, value_enum)]
        what: What,
        #[arg(long, value_enum)]
        format: Format,
        /// Destination directory (default: <output_dir>/export).
        #[arg(long)]
        dest: Option<PathBuf>,
    },
    /// Print the simulator API verb to CLI command mapping.
    Verbs,
}

fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.paths.output_dir = out.clone();
        config.paths.models_file = out.join("models.json");
    }
    config.validate()?;
    Ok(config)
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = resolve_config(&cli)?;
    match &cli.command {
        Command::GenCorpus => print_paths(&gen_corpus(&config)?),
        Command::Fit => print_paths(&run_pipeline(&config, Stage::Fit)?),
        Command::Simulate => print_paths(&run_pipeline(&config, Stage::Simulate)?),
        Command::Evaluate => print_paths(&run_pipeline(&config, Stage::Evaluate)?),
        Command::All => print_paths(&run_pipeline(&config, Stage::All)?),
        Command::Sociogram => print_paths(&write_sociograms(&config)?),
        Command::PredictTask { group } => {
            let metrics = predict_for_group(&config, group)?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
        Command::Export { what, format, dest } => {
            let dest = dest
                .clone()
                .unwrap_or_else(|| config.paths.output_dir.join("export"));
            print_paths(&export_data(&config, *what, *format, &dest)?);
        }
        Command::Verbs => print!("{}", verb_table()),
    }
    Ok(())
}

use std::path::PathBuf;

use anyhow::Result;
use clap::Parser;

use restrain_cli::config;
use restrain_cli::output::OutputSink;
use restrain_cli::{run_subcommand, SUBCOMMANDS};

/// Deterministic numerical laboratory for restrained gradient-descent
/// instabilities.
#[derive(Parser, Debug)]
#[command(name = "restrain-lab", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_parser = SUBCOMMANDS.to_vec())]
    subcommand: String,

    /// Path to the TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,

    /// Dotted-path overrides, e.g. --set heat.steps=500.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory for CSV/SVG/metadata artifacts.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also emit SVG line charts next to the CSVs.
    #[arg(long)]
    svg: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    // config must validate before anything is written
    let cfg = config::load(&cli.config, &cli.set)?;
    let mut sink = OutputSink::new(cli.out.as_deref(), cli.svg)?;
    run_subcommand(&cli.subcommand, &cfg, &mut sink)?;
    for p in sink.written() {
        println!("wrote {}", p.display());
    }
    Ok(())
}

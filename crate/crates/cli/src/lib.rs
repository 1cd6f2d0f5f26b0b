//! Experiment runner library behind the `restrain-lab` binary: configuration
//! loading, dataset ingestion, the experiment catalog, and artifact output.

pub mod config;
pub mod experiments;
pub mod idx;
pub mod output;
pub mod synth;

use anyhow::{bail, Result};

use crate::config::ExperimentConfig;
use crate::output::OutputSink;

pub const SUBCOMMANDS: &[&str] = &[
    "heat",
    "beltrami",
    "linear-bounds",
    "nonlinear",
    "perturb",
    "nesterov-bounds",
    "eos",
    "layers",
];

/// Execute one subcommand, writing artifacts plus a metadata record that
/// suffices to re-run the experiment.
pub fn run_subcommand(name: &str, cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<()> {
    let start = std::time::Instant::now();
    match name {
        "heat" => {
            experiments::heat::run(cfg, sink)?;
        }
        "beltrami" => {
            experiments::beltrami::run(cfg, sink)?;
        }
        "linear-bounds" => {
            experiments::linear_bounds::run(cfg, sink)?;
        }
        "nonlinear" => {
            experiments::nonlinear::run(cfg, sink)?;
        }
        "perturb" => {
            experiments::perturb::run(cfg, sink)?;
        }
        "nesterov-bounds" => {
            experiments::nesterov_bounds::run(cfg, sink)?;
        }
        "eos" => {
            experiments::eos::run(cfg, sink)?;
        }
        "layers" => {
            experiments::layers::run(cfg, sink)?;
        }
        other => bail!("unknown subcommand `{other}` (expected one of {SUBCOMMANDS:?})"),
    }
    let mut meta = config::flatten(cfg);
    meta.push(("subcommand".into(), name.to_string()));
    meta.push(("version".into(), env!("CARGO_PKG_VERSION").to_string()));
    meta.push(("wall_time_ms".into(), format!("{}", start.elapsed().as_millis())));
    sink.metadata(&meta)?;
    Ok(())
}

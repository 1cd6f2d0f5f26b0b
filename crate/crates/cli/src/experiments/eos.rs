//! Edge-of-Stability linkage: normalized sharpness `dt * lambda_max` sampled
//! along the non-linear one-layer training runs.

use anyhow::Result;
use restrain_core::cnn1::{Cnn1Config, Cnn1System, RunOptions};
use restrain_core::numkit::Field2D;
use restrain_core::probes::{Classification, ClassifyParams, TrajectoryRecord};

use crate::config::ExperimentConfig;
use crate::experiments::fname_num;
use crate::output::OutputSink;

#[derive(Debug, Clone)]
pub struct EosRun {
    pub dt: f64,
    pub class: Classification,
    /// Sampled normalized sharpness values `dt * lambda_max`, in order.
    pub normalized: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EosOutcome {
    pub runs: Vec<EosRun>,
}

/// Train at one step size, sampling sharpness periodically.
pub fn trace_at(cfg: &ExperimentConfig, dt: f64) -> (TrajectoryRecord, EosRun) {
    let e = &cfg.eos;
    let mut c = Cnn1Config::new(
        Field2D::checkerboard(e.side, e.side),
        1.0,
        e.beta,
        e.alpha,
        e.window,
        dt,
    );
    c.precision = cfg.precision.into();
    let sys = Cnn1System::new(c);
    let k0 = Field2D::randn(e.window, e.window, cfg.seed);
    let mut opts = RunOptions::plain(e.steps).with_sharpness_every(e.sharpness_every);
    opts.sharpness_iters = e.sharpness_iters;
    // restrained spikes of the saturating head far exceed the median loss
    opts.classify = ClassifyParams::spike_tolerant();
    let (rec, class, _) = sys.run(&k0, &opts);
    let normalized: Vec<f64> = rec
        .sharpness
        .iter()
        .flatten()
        .map(|&l| dt * l)
        .collect();
    (rec, EosRun { dt, class, normalized })
}

pub fn run(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<EosOutcome> {
    let mut outcome = EosOutcome { runs: Vec::new() };
    let mut summary: Vec<(String, String)> = Vec::new();
    for &dt in &cfg.eos.dts {
        let (rec, er) = trace_at(cfg, dt);
        sink.trajectory(&format!("eos_dt_{}", fname_num(dt)), &rec)?;
        let peak = er.normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        summary.push((format!("peak_norm_sharpness_dt_{}", fname_num(dt)), format!("{peak}")));
        summary.push((format!("class_dt_{}", fname_num(dt)), er.class.to_string()));
        outcome.runs.push(er);
    }
    sink.summary(&summary)?;
    Ok(outcome)
}

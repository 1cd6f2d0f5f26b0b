//! Last-bit perturbation amplification: lockstep twin runs of the non-linear
//! one-layer training with the `theta - (eta/k)(k g)` update.

use anyhow::Result;
use restrain_core::cnn1::{Cnn1Config, Cnn1System};
use restrain_core::numkit::{Field2D, Precision};
use restrain_core::probes::{twin_run, PerturbConfig, TwinRun};

use crate::config::ExperimentConfig;
use crate::experiments::fname_num;
use crate::output::OutputSink;

#[derive(Debug, Clone)]
pub struct PerturbOutcome {
    /// Per (dt, k): the RelL1 trace between baseline and perturbed weights.
    pub traces: Vec<(f64, u32, Vec<f64>)>,
}

/// One lockstep twin run in Single precision (the paper's float32 setting).
pub fn twin_at(cfg: &ExperimentConfig, dt: f64, k: u32) -> TwinRun {
    let p = &cfg.perturb;
    let mut c = Cnn1Config::new(
        Field2D::checkerboard(p.side, p.side),
        1.0,
        p.beta,
        p.alpha,
        p.window,
        dt,
    );
    c.precision = Precision::Single;
    let sys = Cnn1System::new(c);
    let k0 = Field2D::randn(p.window, p.window, cfg.seed);
    let pc = PerturbConfig::new(k, Precision::Single);
    twin_run(&k0, dt, p.steps, &pc, |t| sys.grad(t), |t| sys.loss(t).total)
}

pub fn run(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<PerturbOutcome> {
    let p = &cfg.perturb;
    let mut outcome = PerturbOutcome { traces: Vec::new() };
    let mut summary: Vec<(String, String)> = Vec::new();
    for &(dt, tag) in &[(p.dt_stable, "stable"), (p.dt_restrained, "restrained")] {
        for &k in &p.ks {
            let tw = twin_at(cfg, dt, k);
            sink.trajectory(&format!("perturb_{tag}_dt_{}_k{k}", fname_num(dt)), &tw.perturbed)?;
            let max = tw.rel_l1.iter().copied().fold(0.0f64, f64::max);
            summary.push((format!("max_rel_l1_{tag}_k{k}"), format!("{max}")));
            outcome.traces.push((dt, k, tw.rel_l1));
        }
    }
    sink.summary(&summary)?;
    Ok(outcome)
}

//! Beltrami restrained-instability demonstration: the strict CFL step and
//! over-driven multiples of it on a noisy step signal.

use anyhow::Result;
use restrain_core::classic_pde::{beltrami_loss, beltrami_step, BeltramiConfig};
use restrain_core::probes::{classify_trajectory, Classification, ClassifyParams, TrajectoryRecord};

use crate::config::ExperimentConfig;
use crate::experiments::fname_num;
use crate::output::OutputSink;

#[derive(Debug, Clone)]
pub struct BeltramiOutcome {
    /// Per overdrive multiple: (multiple, classification).
    pub runs: Vec<(f64, Classification)>,
    pub strict_dt: f64,
}

/// Run one overdriven trajectory, recording loss and `sup|u|` per step.
pub fn overdriven_trajectory(base: &BeltramiConfig, multiple: f64) -> TrajectoryRecord {
    let mut cfg = base.clone();
    cfg.dt = multiple * base.strict_dt();
    let mut u = cfg.u0.clone();
    let init_norm = u.sup_norm().max(1.0);
    let mut rec = TrajectoryRecord::new();
    rec.push(beltrami_loss(&u, &cfg), f64::NAN, u.sup_norm());
    for _ in 0..cfg.steps {
        u = beltrami_step(&u, &cfg);
        if !u.all_finite() || u.sup_norm() > 1e9 * init_norm {
            rec.push(f64::INFINITY, f64::NAN, u.sup_norm());
            break;
        }
        rec.push(beltrami_loss(&u, &cfg), f64::NAN, u.sup_norm());
    }
    rec
}

pub fn run(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<BeltramiOutcome> {
    let b = &cfg.beltrami;
    let base = BeltramiConfig::noisy_step(b.delta, b.lambda, 0.0, b.steps, cfg.seed);
    let params = ClassifyParams::default();
    let mut outcome = BeltramiOutcome {
        runs: Vec::new(),
        strict_dt: base.strict_dt(),
    };
    let mut summary: Vec<(String, String)> =
        vec![("strict_dt".into(), format!("{}", base.strict_dt()))];
    for &m in &b.overdrive {
        let rec = overdriven_trajectory(&base, m);
        let class = classify_trajectory(&rec, &params);
        sink.trajectory(&format!("beltrami_{}x", fname_num(m)), &rec)?;
        summary.push((format!("class_{}x", fname_num(m)), class.to_string()));
        outcome.runs.push((m, class));
    }
    sink.summary(&summary)?;
    Ok(outcome)
}

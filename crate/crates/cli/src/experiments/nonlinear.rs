//! Non-linear one-layer training at several step sizes: stable, restrained
//! and unstable zones, plus bisection of the two zone boundaries.

use anyhow::Result;
use restrain_core::cnn1::{Cnn1Config, Cnn1System, RunOptions};
use restrain_core::numkit::Field2D;
use restrain_core::probes::{bisect_boundary, Classification, ClassifyParams};

use crate::config::ExperimentConfig;
use crate::experiments::fname_num;
use crate::output::OutputSink;

#[derive(Debug, Clone)]
pub struct NonlinearOutcome {
    /// Per step size: (dt, classification).
    pub runs: Vec<(f64, Classification)>,
    /// Stable/Restrained boundary step size.
    pub stable_boundary: f64,
    /// Restrained/Unstable boundary step size.
    pub unstable_boundary: f64,
}

fn system(cfg: &ExperimentConfig, dt: f64) -> Cnn1System {
    let nl = &cfg.nonlinear;
    let mut c = Cnn1Config::new(
        Field2D::checkerboard(nl.side, nl.side),
        1.0,
        nl.beta,
        nl.alpha,
        nl.window,
        dt,
    );
    c.precision = cfg.precision.into();
    Cnn1System::new(c)
}

/// Run options for the saturating head: restrained spikes far exceed the
/// median loss, so boundedness is judged by the state blow-up check.
fn opts(steps: usize) -> RunOptions {
    let mut o = RunOptions::plain(steps);
    o.classify = ClassifyParams::spike_tolerant();
    o
}

/// Classification of a fresh run at the given step size.
pub fn classify_at(cfg: &ExperimentConfig, dt: f64, steps: usize) -> Classification {
    let sys = system(cfg, dt);
    let k0 = Field2D::randn(cfg.nonlinear.window, cfg.nonlinear.window, cfg.seed);
    let (_, class, _) = sys.run(&k0, &opts(steps));
    class
}

pub fn run(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<NonlinearOutcome> {
    let nl = &cfg.nonlinear;
    let k0 = Field2D::randn(nl.window, nl.window, cfg.seed);
    let mut summary: Vec<(String, String)> = Vec::new();
    let mut runs = Vec::new();
    for &dt in &nl.dts {
        let sys = system(cfg, dt);
        let (rec, class, _) = sys.run(&k0, &opts(nl.steps));
        sink.trajectory(&format!("nonlinear_dt_{}", fname_num(dt)), &rec)?;
        summary.push((format!("class_dt_{}", fname_num(dt)), class.to_string()));
        runs.push((dt, class));
    }

    // zone boundaries: where Stable first ends, and where Unstable begins
    let lo = nl.dts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = nl.dts.iter().copied().fold(0.0f64, f64::max);
    let stable_boundary = bisect_boundary(lo, hi, nl.scan_rel_tol, |dt| {
        classify_at(cfg, dt, nl.scan_steps) != Classification::Stable
    })?;
    let unstable_boundary = bisect_boundary(stable_boundary * 1.2, hi, nl.scan_rel_tol, |dt| {
        classify_at(cfg, dt, nl.scan_steps) == Classification::Unstable
    })?;
    summary.push(("stable_boundary_dt".into(), format!("{stable_boundary}")));
    summary.push(("unstable_boundary_dt".into(), format!("{unstable_boundary}")));
    sink.summary(&summary)?;
    Ok(NonlinearOutcome {
        runs,
        stable_boundary,
        unstable_boundary,
    })
}

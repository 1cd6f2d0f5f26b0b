//! Heat-equation CFL demonstration: triangle initial condition, fixed
//! endpoints, one run per grid ratio.

use anyhow::Result;
use restrain_core::classic_pde::{heat_cfl_max_dt, heat_run, HeatConfig};
use restrain_core::probes::TrajectoryRecord;

use crate::config::ExperimentConfig;
use crate::experiments::fname_num;
use crate::output::OutputSink;

#[derive(Debug, Clone)]
pub struct HeatOutcome {
    /// Per ratio: (ratio, final sup|u|, diverged).
    pub runs: Vec<(f64, f64, bool)>,
}

pub fn run(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<HeatOutcome> {
    let mut outcome = HeatOutcome { runs: Vec::new() };
    let mut summary: Vec<(String, String)> = Vec::new();
    for &ratio in &cfg.heat.ratios {
        let hc = HeatConfig::triangle(ratio, cfg.heat.steps);
        let run = heat_run(&hc);
        let rec = TrajectoryRecord::from_series(&run.series, &run.series);
        sink.trajectory(&format!("heat_ratio_{}", fname_num(ratio)), &rec)?;
        let final_sup = run.final_state.sup_norm();
        summary.push((format!("sup_u_ratio_{}", fname_num(ratio)), format!("{final_sup}")));
        outcome.runs.push((ratio, final_sup, run.diverged));
    }
    summary.push(("cfl_max_dt".into(), {
        let hc = HeatConfig::triangle(0.4, 1);
        format!("{}", heat_cfl_max_dt(&hc))
    }));
    sink.summary(&summary)?;
    Ok(outcome)
}

//! Weight-decay stability bounds of the linearized one-layer flow:
//! closed-form bounds from the image spectrum, plus empirical boundaries of
//! the window-restricted flow located by bisection.

use anyhow::Result;
use restrain_core::cnn1::{Cnn1Config, Cnn1System, StabilityBounds};
use restrain_core::numkit::Field2D;
use restrain_core::probes::{bisect_boundary, Classification};

use crate::config::ExperimentConfig;
use crate::output::OutputSink;

#[derive(Debug, Clone)]
pub struct LinearBoundsOutcome {
    pub analytic: StabilityBounds,
    /// Per kernel side: (side, alpha_max_emp, alpha_min_emp).
    pub empirical: Vec<(usize, f64, f64)>,
}

pub fn run(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<LinearBoundsOutcome> {
    let lb = &cfg.linear_bounds;
    let image = Field2D::checkerboard(lb.side, lb.side);

    let first_kernel = *lb.kernels.first().unwrap_or(&16);
    let mk_sys = |window: usize| {
        let mut c = Cnn1Config::new(image.clone(), 1.0, lb.beta, 0.0, window, lb.dt);
        c.precision = cfg.precision.into();
        Cnn1System::new(c)
    };
    let analytic = mk_sys(first_kernel).stability_bounds(lb.a);

    let mut summary: Vec<(String, String)> = vec![
        ("alpha_max_analytic".into(), format!("{}", analytic.alpha_max)),
        ("alpha_min_analytic".into(), format!("{}", analytic.alpha_min)),
    ];

    let mut empirical = Vec::new();
    for &window in &lb.kernels {
        let sys = mk_sys(window);
        // stable interior point: above every window's lower boundary (these
        // scale up ~4x per window doubling), below the upper boundary ~2/dt
        let mid = 1.2 / lb.dt;
        let amax = bisect_boundary(mid, 4.0 / lb.dt, lb.rel_tol, |alpha| {
            sys.linear_probe(lb.a, alpha, cfg.seed, lb.budget_max) == Classification::Unstable
        })?;
        let amin = bisect_boundary(mid, 1.0, lb.rel_tol, |alpha| {
            sys.linear_probe(lb.a, alpha, cfg.seed, lb.budget_min) == Classification::Unstable
        })?;
        summary.push((format!("alpha_max_emp_{window}"), format!("{amax}")));
        summary.push((format!("alpha_min_emp_{window}"), format!("{amin}")));
        empirical.push((window, amax, amin));
    }
    // headline column: the first kernel's upper boundary
    if let Some(&(_, amax, _)) = empirical.first() {
        summary.insert(2, ("alpha_max_emp".into(), format!("{amax}")));
    }
    sink.summary(&summary)?;
    Ok(LinearBoundsOutcome { analytic, empirical })
}

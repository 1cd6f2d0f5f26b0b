//! Weight-decay stability bounds of the semi-implicit Nesterov scheme:
//! closed-form bound plus empirical upper/lower boundaries of the windowed
//! linearized flow at several momentum coefficients.

use anyhow::Result;
use restrain_core::cnn1::{Cnn1Config, Cnn1System};
use restrain_core::nesterov::{nesterov_bounds, nesterov_linear_probe, NesterovConfig};
use restrain_core::numkit::Field2D;
use restrain_core::probes::{bisect_boundary, Classification};

use crate::config::ExperimentConfig;
use crate::experiments::fname_num;
use crate::output::OutputSink;

#[derive(Debug, Clone)]
pub struct NesterovOutcome {
    pub alpha_max_analytic: f64,
    pub alpha_min_analytic: f64,
    /// Per momentum: (mu, alpha_max_emp, alpha_min_emp).
    pub empirical: Vec<(f64, f64, f64)>,
}

pub fn run(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<NesterovOutcome> {
    let nb = &cfg.nesterov_bounds;
    let image = Field2D::checkerboard(nb.side, nb.side);
    let mut c1 = Cnn1Config::new(image.clone(), 1.0, nb.beta, 0.0, nb.window, nb.dt);
    c1.precision = cfg.precision.into();
    let sys = Cnn1System::new(c1);
    let analytic = nesterov_bounds(&sys.image_power(), nb.a, nb.beta, nb.dt);

    let mut summary: Vec<(String, String)> = vec![
        ("alpha_max_analytic".into(), format!("{}", analytic.alpha_max)),
        ("alpha_min_analytic".into(), format!("{}", analytic.alpha_min)),
    ];

    let (h, w) = image.shape();
    let k0 = Field2D::randn(nb.window, nb.window, cfg.seed).padded_to(h, w);
    let mut empirical = Vec::new();
    for &mu in &nb.mus {
        let ncfg = NesterovConfig::from_mu(mu, nb.dt);
        let probe = |alpha: f64, budget: usize| {
            let mut flow = sys.linearized(nb.a, true);
            flow.alpha = alpha;
            nesterov_linear_probe(&flow, &ncfg, &k0, budget)
        };
        // stable interior point below the exact upper boundary for every mu
        let mid = 0.7 / (nb.dt * nb.dt * (1.0 + 2.0 * 0.95));
        let amax = bisect_boundary(mid, 4.0 / (nb.dt * nb.dt), nb.rel_tol, |alpha| {
            probe(alpha, nb.budget) == Classification::Unstable
        })?;
        let amin = bisect_boundary(mid, 1.0, nb.rel_tol, |alpha| {
            probe(alpha, nb.budget_slow) == Classification::Unstable
        })?;
        summary.push((format!("alpha_max_emp_mu_{}", fname_num(mu)), format!("{amax}")));
        summary.push((format!("alpha_min_emp_mu_{}", fname_num(mu)), format!("{amin}")));
        empirical.push((mu, amax, amin));
    }
    sink.summary(&summary)?;
    Ok(NesterovOutcome {
        alpha_max_analytic: analytic.alpha_max,
        alpha_min_analytic: analytic.alpha_min,
        empirical,
    })
}

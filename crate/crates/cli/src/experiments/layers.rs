//! Depth dependence of stable learning rates: empirical stable-lr boundaries
//! of 1/2/3-layer stacks on a small two-class dataset.

use anyhow::{bail, Result};
use restrain_core::multilayer::{LayerStack, MlSystem, MlcnnConfig};
use restrain_core::numkit::Field2D;
use restrain_core::probes::{bisect_boundary, Classification, ClassifyParams};

use crate::config::{ExperimentConfig, LayersSection};
use crate::experiments::fname_num;
use crate::idx::load_idx;
use crate::output::OutputSink;
use crate::synth::{synth_dataset, SynthKind};

#[derive(Debug, Clone)]
pub struct LayersOutcome {
    /// Per (alpha, depth): empirical stable-lr boundary.
    pub boundaries: Vec<(f64, usize, f64)>,
    /// Witness at alpha = 0 (when scanned): (lr, class of shallowest depth,
    /// class of deepest depth).
    pub witness: Option<(f64, Classification, Classification)>,
}

pub fn dataset(cfg: &ExperimentConfig) -> Result<Vec<(Field2D, f64)>> {
    let d = &cfg.layers.dataset;
    if d.kind == "idx" {
        return load_idx(d.images.as_ref(), d.labels.as_ref(), &d.filter_labels);
    }
    let kind: SynthKind = d.kind.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    Ok(synth_dataset(kind, d.n, d.size, cfg.seed))
}

fn scaled_stack(cfg: &MlcnnConfig, seed: u64, scale: f64) -> LayerStack {
    let mut s = LayerStack::randn(cfg, seed);
    for k in &mut s.kernels {
        for v in k.values_mut() {
            *v *= scale;
        }
    }
    s
}

/// Classification of a full-batch run at one learning rate.
pub fn classify_at(
    cfg: &ExperimentConfig,
    data: &[(Field2D, f64)],
    depth: usize,
    alpha: f64,
    lr: f64,
) -> Classification {
    let l = &cfg.layers;
    let (h, w) = data[0].0.shape();
    let mc = MlcnnConfig::new(vec![l.kernel; depth], l.beta, alpha, lr)
        .with_precision(cfg.precision.into());
    let sys = MlSystem::new(mc.clone(), h, w);
    let stack0 = scaled_stack(&mc, cfg.seed, l.init_scale);
    let mut params = ClassifyParams::spike_tolerant();
    // A stack kicked past the stability boundary saturates every activation
    // and freezes with a bounded loss (the clamp ceiling, or ln 2 when the
    // features die), so instability is judged by weight growth rather than
    // loss blow-up.
    params.divergence_factor = 100.0;
    // Slow full-batch descent carries numerical wiggles; only oscillations
    // commensurate with the loss scale count as restrained cycling.
    params.prominence_rel = 0.05;
    let (_, class, _) = sys.gd_run(&stack0, data, l.steps, &params);
    class
}

/// Largest learning rate at which training stays Stable (bisection against
/// "no longer Stable").
pub fn stable_boundary(
    cfg: &ExperimentConfig,
    data: &[(Field2D, f64)],
    depth: usize,
    alpha: f64,
) -> Result<f64> {
    let l: &LayersSection = &cfg.layers;
    let b = bisect_boundary(l.lr_lo, l.lr_hi, l.rel_tol, |lr| {
        classify_at(cfg, data, depth, alpha, lr) != Classification::Stable
    })?;
    Ok(b)
}

pub fn run(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<LayersOutcome> {
    let l = &cfg.layers;
    if l.depths.is_empty() || l.alphas.is_empty() {
        bail!("layers experiment needs at least one depth and one alpha");
    }
    let data = dataset(cfg)?;
    let mut summary: Vec<(String, String)> = Vec::new();
    let mut boundaries = Vec::new();
    for &alpha in &l.alphas {
        for &depth in &l.depths {
            let b = stable_boundary(cfg, &data, depth, alpha)?;
            summary.push((
                format!("stable_lr_alpha_{}_depth_{depth}", fname_num(alpha)),
                format!("{b}"),
            ));
            boundaries.push((alpha, depth, b));
        }
    }

    // witness learning rate separating shallow-stable from deep-unstable
    let witness = {
        let alpha0 = l.alphas[0];
        let dmin = *l.depths.iter().min().unwrap();
        let dmax = *l.depths.iter().max().unwrap();
        let b_of = |d: usize| {
            boundaries
                .iter()
                .find(|(a, dep, _)| *a == alpha0 && *dep == d)
                .map(|(_, _, b)| *b)
        };
        match (b_of(dmin), b_of(dmax)) {
            (Some(bs), Some(bd)) if bd < bs && dmin != dmax => {
                let lr = (bs * bd).sqrt();
                let cs = classify_at(cfg, &data, dmin, alpha0, lr);
                let cd = classify_at(cfg, &data, dmax, alpha0, lr);
                summary.push(("witness_lr".into(), format!("{lr}")));
                summary.push((format!("witness_class_depth_{dmin}"), cs.to_string()));
                summary.push((format!("witness_class_depth_{dmax}"), cd.to_string()));
                Some((lr, cs, cd))
            }
            _ => None,
        }
    };
    sink.summary(&summary)?;
    Ok(LayersOutcome { boundaries, witness })
}

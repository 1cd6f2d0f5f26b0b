//! Gradient and Hessian-vector oracles: analytic backward passes against
//! central finite differences of the loss over many random instances.

use restrain_core::cnn1::{Cnn1Config, Cnn1System};
use restrain_core::multilayer::{LayerStack, MlSystem, MlcnnConfig};
use restrain_core::numkit::Field2D;

const INSTANCES: u64 = 30;
const REL_TOL: f64 = 1e-5;

/// Kernel scaled so the pooled sum stays in the curved part of the sigmoid;
/// a saturated prediction has a vanishing (and numerically hostile) gradient.
fn curved_kernel(side: usize, seed: u64, scale: f64) -> Field2D {
    let mut k = Field2D::randn(side, side, seed);
    for v in k.values_mut() {
        *v *= scale;
    }
    k
}

#[test]
fn cnn1_grad_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let cfg = Cnn1Config::new(
            Field2D::randn(16, 16, 1000 + seed),
            (seed % 2) as f64,
            0.4 + 0.1 * (seed % 5) as f64,
            0.05 * (seed % 7) as f64,
            3 + (seed % 3) as usize,
            0.01,
        );
        let win = cfg.window;
        let sys = Cnn1System::new(cfg);
        let k = curved_kernel(win, 2000 + seed, 0.05);
        let g = sys.grad(&k);
        assert!(g.sup_norm() > 0.0, "seed {seed}: vacuously zero gradient");
        let eps = 1e-5;
        for i in 0..win {
            for j in 0..win {
                let mut kp = k.clone();
                *kp.at_mut(i, j) += eps;
                let mut km = k.clone();
                *km.at_mut(i, j) -= eps;
                let fd = (sys.loss(&kp).total - sys.loss(&km).total) / (2.0 * eps);
                let denom = fd.abs().max(g.sup_norm());
                assert!(
                    (g.at(i, j) - fd).abs() / denom < REL_TOL,
                    "seed {seed} ({i},{j}): grad {} fd {fd}",
                    g.at(i, j),
                );
            }
        }
    }
}

#[test]
fn multilayer_grad_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let depth = 1 + (seed % 3) as usize;
        let sizes: Vec<usize> = (0..depth).map(|i| 2 + ((seed as usize + i) % 2)).collect();
        let cfg = MlcnnConfig::new(sizes, 0.5 + 0.25 * (seed % 3) as f64, 0.1, 0.01);
        let sys = MlSystem::new(cfg.clone(), 8, 8);
        let mut stack = LayerStack::randn(&cfg, 3000 + seed);
        for k in &mut stack.kernels {
            for v in k.values_mut() {
                *v *= 0.3;
            }
        }
        let img = Field2D::randn(8, 8, 4000 + seed);
        let y = (seed % 2) as f64;
        let grads = sys.sample_grad(&stack, &img, y);
        let eps = 1e-5;
        for li in 0..depth {
            let (kh, kw) = stack.kernels[li].shape();
            for i in 0..kh {
                for j in 0..kw {
                    let mut sp = stack.clone();
                    *sp.kernels[li].at_mut(i, j) += eps;
                    let mut sm = stack.clone();
                    *sm.kernels[li].at_mut(i, j) -= eps;
                    let fd = (sys.sample_loss(&sp, &img, y).total
                        - sys.sample_loss(&sm, &img, y).total)
                        / (2.0 * eps);
                    let denom = fd.abs().max(grads[li].sup_norm()).max(1e-12);
                    assert!(
                        (grads[li].at(i, j) - fd).abs() / denom < REL_TOL,
                        "seed {seed} layer {li} ({i},{j}): {} vs {fd}",
                        grads[li].at(i, j),
                    );
                }
            }
        }
    }
}

#[test]
fn cnn1_hvp_matches_differenced_gradient() {
    for seed in 0..INSTANCES {
        let cfg = Cnn1Config::new(
            Field2D::randn(16, 16, 5000 + seed),
            (seed % 2) as f64,
            0.5 + 0.1 * (seed % 4) as f64,
            0.3,
            4,
            0.01,
        );
        let sys = Cnn1System::new(cfg);
        let k = curved_kernel(4, 6000 + seed, 0.05);
        let v = Field2D::randn(4, 4, 7000 + seed);
        let hv = sys.hvp(&k, &v);
        // central difference of the analytic gradient along v
        let eps = 1e-6;
        let shift = |s: f64| {
            Field2D::new(
                k.values()
                    .iter()
                    .zip(v.values())
                    .map(|(&ki, &vi)| ki + s * vi)
                    .collect(),
                4,
                4,
            )
        };
        let gp = sys.grad(&shift(eps));
        let gm = sys.grad(&shift(-eps));
        let scale = hv.sup_norm().max(1e-12);
        for ((&h, &p), &m) in hv.values().iter().zip(gp.values()).zip(gm.values()) {
            let fd = (p - m) / (2.0 * eps);
            assert!(
                (h - fd).abs() / scale < 1e-4,
                "seed {seed}: hvp {h} vs fd {fd}"
            );
        }
    }
}

#[test]
fn cnn1_hvp_is_symmetric() {
    // <u, H v> = <v, H u> for a smooth loss
    for seed in 0..5u64 {
        let cfg = Cnn1Config::new(Field2D::randn(16, 16, 8000 + seed), 1.0, 1.0, 0.2, 4, 0.01);
        let sys = Cnn1System::new(cfg);
        let k = curved_kernel(4, 8100 + seed, 0.05);
        let u = Field2D::randn(4, 4, 8200 + seed);
        let v = Field2D::randn(4, 4, 8300 + seed);
        let hu = sys.hvp(&k, &u);
        let hv = sys.hvp(&k, &v);
        let dot = |a: &Field2D, b: &Field2D| -> f64 {
            a.values().iter().zip(b.values()).map(|(&x, &y)| x * y).sum()
        };
        let lhs = dot(&u, &hv);
        let rhs = dot(&v, &hu);
        assert!(
            (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-300),
            "seed {seed}: {lhs} vs {rhs}"
        );
    }
}

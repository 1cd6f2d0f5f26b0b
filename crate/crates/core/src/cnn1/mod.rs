//! One-layer continuum CNN: forward model, cross-entropy loss with weight
//! decay, the exact windowed gradient-descent flow, linearizations in the
//! three activation regimes, the per-frequency amplifier of the linear flow,
//! and closed-form stability bounds.
//!
//! The model is `f(I) = s[ sum_x r(K * I)(x) ]` with Swish `r`, sigmoid `s`
//! (no bias), cross-correlation `(K * I)(x) = sum_z K(z) I(x + z)`, and loss
//! `CE(y, f(I)) + (alpha/2) ||K||^2`. Kernels are stored corner-indexed: the
//! support window is the `w x w` block at offset zero, which on a periodic
//! grid is a circular shift of a centered window and has identical spectra
//! and stability bounds.

pub(crate) mod linear;
mod swish;

pub use linear::{
    amplifier, stability_bounds, AmplifierSpectrum, LinearCnn1, Regime, RegimeMap, Scheme,
    StabilityBounds,
};
pub use swish::{sigmoid, swish, swish_prime, swish_second};

use crate::numkit::{det_sum, Boundary, ConvImage, CorrEngine, Field2D, Precision};
use crate::probes::{
    classify_trajectory, growth_probe, sharpness_op, Classification, ClassifyParams,
    TrajectoryRecord,
};

/// Kernel sup-norm beyond which a trajectory is flagged as diverged.
pub const DIVERGENCE_SUP: f64 = 1e12;
/// Cross-entropy clamp: predictions are kept in `[YHAT_CLAMP, 1 - YHAT_CLAMP]`
/// before the logarithm.
pub const YHAT_CLAMP: f64 = 1e-12;
/// Default regime threshold on `beta * (K * I)`: `r'` is within ~12% of its
/// saturated value beyond `|x| = 2`.
pub const DEFAULT_TAU: f64 = 2.0;

/// Full parameterization of the one-layer model.
#[derive(Debug, Clone)]
pub struct Cnn1Config {
    /// Input image `I`.
    pub image: Field2D,
    /// Binary label, 0 or 1.
    pub label: f64,
    /// Swish steepness, `> 0`.
    pub beta: f64,
    /// Weight decay coefficient.
    pub alpha: f64,
    /// Kernel support extent: the window is the `window x window` corner block.
    pub window: usize,
    /// Forward-Euler step size.
    pub dt: f64,
    pub precision: Precision,
    pub boundary: Boundary,
}

impl Cnn1Config {
    pub fn new(image: Field2D, label: f64, beta: f64, alpha: f64, window: usize, dt: f64) -> Self {
        assert!(label == 0.0 || label == 1.0, "label must be 0 or 1");
        assert!(beta > 0.0, "beta must be positive");
        let (h, w) = image.shape();
        assert!(window >= 1 && window <= h && window <= w);
        Cnn1Config {
            image,
            label,
            beta,
            alpha,
            window,
            dt,
            precision: Precision::Double,
            boundary: Boundary::Periodic,
        }
    }

    pub fn with_precision(mut self, p: Precision) -> Self {
        self.precision = p;
        self
    }

    pub fn with_boundary(mut self, b: Boundary) -> Self {
        self.boundary = b;
        self
    }

    /// The checkerboard setup used throughout the stability experiments.
    pub fn checkerboard(side: usize, window: usize, alpha: f64, dt: f64) -> Self {
        Cnn1Config::new(Field2D::checkerboard(side, side), 1.0, 1.0, alpha, window, dt)
    }
}

/// Kernel plus bookkeeping for one trajectory.
#[derive(Debug, Clone)]
pub struct KernelState {
    pub kernel: Field2D,
    pub iteration: usize,
    pub diverged: bool,
}

impl KernelState {
    pub fn new(kernel: Field2D) -> Self {
        KernelState {
            kernel,
            iteration: 0,
            diverged: false,
        }
    }

    /// Seeded standard-normal kernel of the configured window size.
    pub fn randn(cfg: &Cnn1Config, seed: u64) -> Self {
        KernelState::new(Field2D::randn(cfg.window, cfg.window, seed))
    }
}

/// Loss evaluation with the clamp flag.
#[derive(Debug, Clone, Copy)]
pub struct LossEval {
    pub total: f64,
    pub yhat: f64,
    /// True when the prediction had to be clamped before the logarithm;
    /// stability experiments reject clamped trajectories.
    pub clamped: bool,
}

/// One full forward/backward evaluation.
#[derive(Debug, Clone)]
pub struct EvalOut {
    pub loss: LossEval,
    pub grad: Field2D,
    /// Pre-activation `K * I` (image-sized), for regime accounting.
    pub pre: Field2D,
}

/// Options for a recorded nonlinear run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub steps: usize,
    /// Sample sharpness every this many iterations (None: never).
    pub sharpness_every: Option<usize>,
    pub sharpness_iters: usize,
    pub classify: ClassifyParams,
}

impl RunOptions {
    pub fn plain(steps: usize) -> Self {
        RunOptions {
            steps,
            sharpness_every: None,
            sharpness_iters: 100,
            classify: ClassifyParams::default(),
        }
    }

    pub fn with_sharpness_every(mut self, every: usize) -> Self {
        self.sharpness_every = Some(every);
        self
    }
}

/// The one-layer model bound to a prepared image: all per-image work
/// (correlation plans, image spectrum) is done once.
pub struct Cnn1System {
    pub cfg: Cnn1Config,
    engine: CorrEngine,
    image: ConvImage,
    /// Plain grid sum of the image (`dx = 1`).
    pub image_bar: f64,
}

impl Cnn1System {
    pub fn new(cfg: Cnn1Config) -> Self {
        let (h, w) = cfg.image.shape();
        let engine = CorrEngine::new(h, w, cfg.boundary, cfg.precision);
        let image = engine.prepare(cfg.image.clone());
        let image_bar = cfg.image.sum(cfg.precision);
        Cnn1System {
            cfg,
            engine,
            image,
            image_bar,
        }
    }

    /// `|I_hat(omega)|^2` on the discrete frequency grid.
    pub fn image_power(&self) -> Field2D {
        self.engine.image_power(&self.image)
    }

    /// `s[ sum_x r(K * I)(x) ]`.
    pub fn forward(&self, k: &Field2D) -> f64 {
        let pre = self.engine.xcorr_same(k, &self.image);
        self.yhat_from_pre(&pre)
    }

    fn yhat_from_pre(&self, pre: &Field2D) -> f64 {
        let p = self.cfg.precision;
        let acts: Vec<f64> = pre
            .values()
            .iter()
            .map(|&u| p.round(swish(u, self.cfg.beta)))
            .collect();
        let pooled = det_sum(&acts, p);
        p.round(sigmoid(pooled))
    }

    /// Cross-entropy plus `(alpha/2) sum K^2`.
    pub fn loss(&self, k: &Field2D) -> LossEval {
        let pre = self.engine.xcorr_same(k, &self.image);
        self.loss_from_pre(&pre, k)
    }

    fn loss_from_pre(&self, pre: &Field2D, k: &Field2D) -> LossEval {
        let p = self.cfg.precision;
        let yhat = self.yhat_from_pre(pre);
        let clamped = !(YHAT_CLAMP..=1.0 - YHAT_CLAMP).contains(&yhat);
        let yc = yhat.clamp(YHAT_CLAMP, 1.0 - YHAT_CLAMP);
        let y = self.cfg.label;
        let ce = p.round(-(y * yc.ln() + (1.0 - y) * (1.0 - yc).ln()));
        let sq: Vec<f64> = k.values().iter().map(|&v| p.round(v * v)).collect();
        let reg = p.round(0.5 * self.cfg.alpha * det_sum(&sq, p));
        LossEval {
            total: p.round(ce + reg),
            yhat,
            clamped,
        }
    }

    /// Exact gradient of the loss with respect to the windowed kernel:
    /// `(yhat - y) * [r'(K * I) * I] + alpha K` on the kernel support.
    pub fn grad(&self, k: &Field2D) -> Field2D {
        self.eval(k).grad
    }

    /// Shared forward/backward pass: one correlation for the pre-activation,
    /// one for the gradient.
    pub fn eval(&self, k: &Field2D) -> EvalOut {
        let p = self.cfg.precision;
        let pre = self.engine.xcorr_same(k, &self.image);
        let loss = self.loss_from_pre(&pre, k);
        // Differentiate through the clamped prediction so a saturated sigmoid
        // still leaves a (tiny) nonzero data term; with an exact zero the
        // update K <- (1 - dt*alpha) K can pin the kernel onto the K = 0
        // saddle of balanced images whenever dt*alpha = 1.
        let yc = loss.yhat.clamp(YHAT_CLAMP, 1.0 - YHAT_CLAMP);
        let a = p.round(yc - self.cfg.label);
        let (h, w) = pre.shape();
        let g = Field2D::new(
            pre.values()
                .iter()
                .map(|&u| p.round(a * p.round(swish_prime(u, self.cfg.beta))))
                .collect(),
            h,
            w,
        );
        let mut grad = self
            .engine
            .xcorr_window(&g, &self.image, self.cfg.window, self.cfg.window);
        for (gi, &ki) in grad.values_mut().iter_mut().zip(k.values()) {
            *gi = p.round(*gi + p.round(self.cfg.alpha * ki));
        }
        EvalOut { loss, grad, pre }
    }

    /// Exact Hessian-vector product of the loss at `k` applied to the
    /// window-sized direction `v`.
    ///
    /// With `z = sum_x r(K * I)(x)`, `u = K * I` and `W[.]` the windowed
    /// correlation with the image, the Hessian splits into a rank-one
    /// sigmoid/cross-entropy part, a reaction-curvature part, and the weight
    /// decay:
    ///
    /// `H v = yhat (1 - yhat) (G . v) G + (yhat - y) W[r''(u) . (v * I)] + alpha v`
    ///
    /// with `G = W[r'(u)]`. Swish is smooth, so this is exact everywhere; no
    /// finite differencing of the gradient is involved, which matters near
    /// minima where `grad ~ 0` makes difference quotients pure cancellation
    /// noise.
    pub fn hvp(&self, k: &Field2D, v: &Field2D) -> Field2D {
        let b = self.cfg.beta;
        let win = self.cfg.window;
        let pre = self.engine.xcorr_same(k, &self.image);
        let yhat = self.yhat_from_pre(&pre);
        let a = yhat.clamp(YHAT_CLAMP, 1.0 - YHAT_CLAMP) - self.cfg.label;
        let (h, w) = pre.shape();
        let rp = Field2D::new(
            pre.values().iter().map(|&u| swish_prime(u, b)).collect(),
            h,
            w,
        );
        let g = self.engine.xcorr_window(&rp, &self.image, win, win);
        let c = self.engine.xcorr_same(v, &self.image);
        let t = Field2D::new(
            pre.values()
                .iter()
                .zip(c.values())
                .map(|(&u, &cx)| swish_second(u, b) * cx)
                .collect(),
            h,
            w,
        );
        let curv = self.engine.xcorr_window(&t, &self.image, win, win);
        let gv: f64 = g.values().iter().zip(v.values()).map(|(&x, &y)| x * y).sum();
        let s = yhat * (1.0 - yhat);
        let mut out = v.clone();
        for ((o, &gi), &ci) in out
            .values_mut()
            .iter_mut()
            .zip(g.values())
            .zip(curv.values())
        {
            *o = s * gv * gi + a * ci + self.cfg.alpha * *o;
        }
        out
    }

    /// Largest (algebraic) Hessian eigenvalue at `k` by power iteration on
    /// [`Self::hvp`]. Power iteration finds the magnitude-dominant eigenvalue;
    /// when that is negative a shifted second pass recovers the top of the
    /// spectrum.
    pub fn sharpness_at(&self, k: &Field2D, iters: usize) -> f64 {
        let (kh, kw) = k.shape();
        let n = kh * kw;
        let r = sharpness_op(
            |v| self.hvp(k, &Field2D::new(v.to_vec(), kh, kw)).values().to_vec(),
            n,
            iters,
        );
        if r.lambda_max >= 0.0 {
            return r.lambda_max;
        }
        let shift = -r.lambda_max;
        let r2 = sharpness_op(
            |v| {
                let mut hv = self.hvp(k, &Field2D::new(v.to_vec(), kh, kw));
                for (o, &vi) in hv.values_mut().iter_mut().zip(v) {
                    *o += shift * vi;
                }
                hv.values().to_vec()
            },
            n,
            iters,
        );
        r2.lambda_max - shift
    }

    /// One forward-Euler step `K - dt * grad`, with the divergence flag set
    /// when any entry is non-finite or the sup norm exceeds [`DIVERGENCE_SUP`].
    pub fn gd_step(&self, st: &KernelState) -> KernelState {
        let grad = self.grad(&st.kernel);
        self.advance(st, &grad)
    }

    fn advance(&self, st: &KernelState, grad: &Field2D) -> KernelState {
        let p = self.cfg.precision;
        let (kh, kw) = st.kernel.shape();
        let kernel = Field2D::new(
            st.kernel
                .values()
                .iter()
                .zip(grad.values())
                .map(|(&ki, &gi)| p.round(ki - p.round(self.cfg.dt * gi)))
                .collect(),
            kh,
            kw,
        );
        let diverged = !kernel.all_finite() || kernel.sup_norm() > DIVERGENCE_SUP;
        KernelState {
            kernel,
            iteration: st.iteration + 1,
            diverged,
        }
    }

    /// Run `opts.steps` recorded iterations from `k0`, classifying the loss
    /// trajectory on completion. Stops early on divergence.
    pub fn run(
        &self,
        k0: &Field2D,
        opts: &RunOptions,
    ) -> (TrajectoryRecord, Classification, KernelState) {
        let mut st = KernelState::new(k0.clone());
        let mut rec = TrajectoryRecord::new();
        for i in 0..opts.steps {
            let e = self.eval(&st.kernel);
            let sh = match opts.sharpness_every {
                Some(every) if i % every == 0 => {
                    Some(self.sharpness_at(&st.kernel, opts.sharpness_iters))
                }
                _ => None,
            };
            rec.push_full(e.loss.total, e.grad.sup_norm(), st.kernel.sup_norm(), sh, None);
            st = self.advance(&st, &e.grad);
            if st.diverged {
                rec.push(f64::INFINITY, f64::INFINITY, st.kernel.sup_norm());
                break;
            }
        }
        let class = if st.diverged {
            Classification::Unstable
        } else {
            classify_trajectory(&rec, &opts.classify)
        };
        (rec, class, st)
    }

    /// Per-pixel activation regime of `beta * (K * I)` against threshold
    /// `tau`.
    pub fn regime_classify(&self, k: &Field2D, tau: f64) -> RegimeMap {
        assert!(tau > 0.0);
        let pre = self.engine.xcorr_same(k, &self.image);
        RegimeMap::from_preactivation(&pre, self.cfg.beta, tau)
    }

    /// Transitioning-regime stability bounds from the image spectrum.
    pub fn stability_bounds(&self, a: f64) -> StabilityBounds {
        stability_bounds(&self.image_power(), a, self.cfg.beta, self.cfg.dt)
    }

    /// Regime-resolved bounds: the Activated and NotActivated flows have
    /// closed forms in `I_bar`; Transitioning delegates to the spectrum.
    pub fn regime_bounds(&self, regime: Regime, a: f64) -> StabilityBounds {
        match regime {
            Regime::Transitioning => self.stability_bounds(a),
            Regime::Activated => {
                // alpha in (-I_bar^2/8, 2/dt - I_bar^2/8)
                let c = self.image_bar * self.image_bar / 8.0;
                StabilityBounds::closed_form(Regime::Activated, -c, 2.0 / self.cfg.dt - c, c)
            }
            Regime::NotActivated => StabilityBounds::closed_form(
                Regime::NotActivated,
                f64::NEG_INFINITY,
                2.0 / self.cfg.dt,
                0.0,
            ),
        }
    }

    /// Linearized flow around `K = 0` with frozen `a`, on the full grid.
    pub fn linearized(&self, a: f64, windowed: bool) -> LinearCnn1 {
        LinearCnn1::new(
            &self.cfg.image,
            a,
            self.cfg.beta,
            self.cfg.alpha,
            self.cfg.dt,
            if windowed {
                Some((self.cfg.window, self.cfg.window))
            } else {
                None
            },
        )
    }

    /// Growth-probe classification of the windowed linear flow started from a
    /// seeded random windowed state. Used by empirical bound scans.
    pub fn linear_probe(&self, a: f64, alpha: f64, seed: u64, budget: usize) -> Classification {
        let mut flow = self.linearized(a, true);
        flow.alpha = alpha;
        let (h, w) = self.cfg.image.shape();
        let mut k = Field2D::randn(self.cfg.window, self.cfg.window, seed).padded_to(h, w);
        let init = k.sup_norm();
        growth_probe(init, budget, || {
            k = flow.step(&k);
            k.sup_norm()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> Cnn1Config {
        Cnn1Config::new(Field2D::randn(16, 16, 11), 1.0, 1.0, 0.3, 5, 0.01)
    }

    #[test]
    fn forward_at_zero_kernel_is_half() {
        let sys = Cnn1System::new(small_cfg());
        let k = Field2D::zeros(5, 5);
        assert_eq!(sys.forward(&k), 0.5);
    }

    #[test]
    fn forward_closed_form_1x1() {
        // 1x1 kernel c on a constant image of ones: yhat = s(N * r(c))
        let img = Field2D::constant(8, 8, 1.0);
        let cfg = Cnn1Config::new(img, 1.0, 2.0, 0.0, 1, 0.01);
        let sys = Cnn1System::new(cfg);
        let c = 0.7;
        let k = Field2D::constant(1, 1, c);
        let expect = sigmoid(64.0 * swish(c, 2.0));
        assert!((sys.forward(&k) - expect).abs() < 1e-12);
    }

    #[test]
    fn forward_matches_slow_reimplementation() {
        let cfg = small_cfg();
        let sys = Cnn1System::new(cfg.clone());
        let k = Field2D::randn(5, 5, 3);
        // straightforward re-implementation with naive wrapping loops
        let (h, w) = cfg.image.shape();
        let mut pooled = 0.0;
        for y in 0..h {
            for x in 0..w {
                let mut u = 0.0;
                for zi in 0..5 {
                    for zj in 0..5 {
                        u += k.at(zi, zj) * cfg.image.at((y + zi) % h, (x + zj) % w);
                    }
                }
                pooled += swish(u, cfg.beta);
            }
        }
        let expect = sigmoid(pooled);
        assert!((sys.forward(&k) - expect).abs() < 1e-12);
    }

    #[test]
    fn loss_closed_forms() {
        let sys = Cnn1System::new(small_cfg());
        // K = 0, y = 1 -> CE = -ln(1/2) = ln 2, reg = 0
        let l = sys.loss(&Field2D::zeros(5, 5));
        assert!((l.total - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(!l.clamped);
        // regularizer: sum K^2 = 4 with alpha = 2 contributes 4
        let mut cfg = small_cfg();
        cfg.alpha = 2.0;
        let sys2 = Cnn1System::new(cfg);
        let k = Field2D::constant(2, 1, 2.0f64.sqrt());
        let l2 = sys2.loss(&k);
        let ce = {
            let yhat = sys2.forward(&k);
            -yhat.ln()
        };
        assert!((l2.total - (ce + 4.0)).abs() < 1e-9);
    }

    #[test]
    fn grad_at_zero_kernel_is_minus_ibar_over_four() {
        // y = 1: a = -1/2, r'(0) = 1/2, correlation of a constant with I
        // gives I_bar at every offset (periodic)
        let cfg = small_cfg();
        let ibar = cfg.image.sum(Precision::Double);
        let sys = Cnn1System::new(cfg);
        let g = sys.grad(&Field2D::zeros(5, 5));
        for &v in g.values() {
            assert!((v - (-ibar / 4.0)).abs() < 1e-10, "got {v}, want {}", -ibar / 4.0);
        }
    }

    #[test]
    fn grad_on_zero_image_is_pure_decay() {
        let cfg = Cnn1Config::new(Field2D::zeros(12, 12), 1.0, 1.0, 0.7, 3, 0.01);
        let sys = Cnn1System::new(cfg);
        let k = Field2D::randn(3, 3, 5);
        let g = sys.grad(&k);
        for (&gi, &ki) in g.values().iter().zip(k.values()) {
            assert!((gi - 0.7 * ki).abs() < 1e-14);
        }
    }

    #[test]
    fn grad_matches_finite_differences() {
        for seed in 0..4u64 {
            let cfg = Cnn1Config::new(
                Field2D::randn(16, 16, 100 + seed),
                if seed % 2 == 0 { 1.0 } else { 0.0 },
                0.5 + 0.5 * seed as f64,
                0.2 * seed as f64,
                5,
                0.01,
            );
            let sys = Cnn1System::new(cfg);
            // scale the kernel down so the pooled sum stays in the curved
            // part of the sigmoid (a saturated yhat has zero gradient)
            let mut k = Field2D::randn(5, 5, 200 + seed);
            for v in k.values_mut() {
                *v *= 0.05;
            }
            let g = sys.grad(&k);
            assert!(g.sup_norm() > 0.0, "seed {seed}: vacuously zero gradient");
            let eps = 1e-5;
            for i in 0..5 {
                for j in 0..5 {
                    let mut kp = k.clone();
                    *kp.at_mut(i, j) += eps;
                    let mut km = k.clone();
                    *km.at_mut(i, j) -= eps;
                    let fd = (sys.loss(&kp).total - sys.loss(&km).total) / (2.0 * eps);
                    let denom = fd.abs().max(g.sup_norm());
                    assert!(
                        (g.at(i, j) - fd).abs() / denom < 1e-5,
                        "seed {seed} ({i},{j}): grad {} fd {}",
                        g.at(i, j),
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn zero_dt_leaves_kernel_unchanged() {
        let mut cfg = small_cfg();
        cfg.dt = 0.0;
        let sys = Cnn1System::new(cfg);
        let st = KernelState::new(Field2D::randn(5, 5, 8));
        let next = sys.gd_step(&st);
        assert_eq!(next.kernel, st.kernel);
        assert_eq!(next.iteration, 1);
        assert!(!next.diverged);
    }

    #[test]
    fn regime_partition_counts() {
        let sys = Cnn1System::new(small_cfg());
        let k0 = Field2D::zeros(5, 5);
        let m = sys.regime_classify(&k0, DEFAULT_TAU);
        assert_eq!(m.transitioning, 256);
        assert_eq!(m.activated + m.not_activated, 0);
        let kr = Field2D::randn(5, 5, 2);
        let mr = sys.regime_classify(&kr, 0.05);
        assert_eq!(mr.transitioning + mr.activated + mr.not_activated, 256);
    }

    #[test]
    fn all_activated_for_large_positive_preactivation() {
        let img = Field2D::constant(8, 8, 1.0);
        let cfg = Cnn1Config::new(img, 1.0, 1.0, 0.0, 2, 0.01);
        let sys = Cnn1System::new(cfg);
        let k = Field2D::constant(2, 2, 10.0);
        let m = sys.regime_classify(&k, DEFAULT_TAU);
        assert_eq!(m.activated, 64);
    }

    #[test]
    fn single_precision_trajectory_is_bit_reproducible() {
        let cfg = small_cfg().with_precision(Precision::Single);
        let sys = Cnn1System::new(cfg);
        let run = |_: ()| {
            let mut st = KernelState::new(Field2D::randn(5, 5, 77));
            for _ in 0..20 {
                st = sys.gd_step(&st);
            }
            st.kernel
        };
        let a = run(());
        let b = run(());
        for (&x, &y) in a.values().iter().zip(b.values()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

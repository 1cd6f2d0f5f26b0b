//! N-layer single-channel convolutional model: stacked correlation + Swish
//! layers, global sum pooling, sigmoid, cross-entropy with weight decay.
//!
//! Per-kernel gradients are computed by reverse accumulation through the
//! stack; for `N = 1` every operation and reduction happens in the same order
//! as in [`crate::cnn1`], so the two modules agree bit for bit. Layer-isolated
//! stability bounds reuse the one-layer analysis with the constant `a`
//! replaced by `a_hat = gamma * (yhat - y)`, where `gamma` is a constant
//! approximation of the averaged downstream gradient.

use crate::cnn1::{sigmoid, stability_bounds, swish, swish_prime, LossEval, StabilityBounds, YHAT_CLAMP};
use crate::numkit::{det_sum, Boundary, CorrEngine, Field2D, Precision};
use crate::probes::{classify_trajectory, Classification, ClassifyParams, TrajectoryRecord};

/// Kernel sup-norm beyond which a multilayer run is flagged as diverged.
pub const DIVERGENCE_SUP: f64 = 1e12;

/// Parameterization of the N-layer model (single channel per layer).
#[derive(Debug, Clone)]
pub struct MlcnnConfig {
    /// Square kernel extent per layer; length = layer count `N >= 1`.
    pub kernel_sizes: Vec<usize>,
    pub beta: f64,
    pub alpha: f64,
    pub dt: f64,
    pub precision: Precision,
    pub boundary: Boundary,
}

impl MlcnnConfig {
    pub fn new(kernel_sizes: Vec<usize>, beta: f64, alpha: f64, dt: f64) -> Self {
        assert!(!kernel_sizes.is_empty(), "need at least one layer");
        assert!(beta > 0.0);
        MlcnnConfig {
            kernel_sizes,
            beta,
            alpha,
            dt,
            precision: Precision::Double,
            boundary: Boundary::Periodic,
        }
    }

    pub fn layers(&self) -> usize {
        self.kernel_sizes.len()
    }

    pub fn with_precision(mut self, p: Precision) -> Self {
        self.precision = p;
        self
    }

    pub fn with_boundary(mut self, b: Boundary) -> Self {
        self.boundary = b;
        self
    }
}

/// The trainable kernels, one per layer.
#[derive(Debug, Clone)]
pub struct LayerStack {
    pub kernels: Vec<Field2D>,
}

impl LayerStack {
    pub fn zeros(cfg: &MlcnnConfig) -> Self {
        LayerStack {
            kernels: cfg.kernel_sizes.iter().map(|&k| Field2D::zeros(k, k)).collect(),
        }
    }

    /// Seeded standard-normal initialization; layer `i` uses `seed + i`.
    pub fn randn(cfg: &MlcnnConfig, seed: u64) -> Self {
        LayerStack {
            kernels: cfg
                .kernel_sizes
                .iter()
                .enumerate()
                .map(|(i, &k)| Field2D::randn(k, k, seed + i as u64))
                .collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.kernels.iter().map(|k| k.sup_norm()).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.kernels.iter().all(|k| k.all_finite())
    }
}

/// Cached intermediates of one forward pass: `images[0] = I`,
/// `pres[i] = K_i * images[i]`, `images[i+1] = r(pres[i])`.
#[derive(Debug, Clone)]
pub struct MlForward {
    pub images: Vec<Field2D>,
    pub pres: Vec<Field2D>,
    pub yhat: f64,
}

/// The multilayer model bound to one feature-map shape.
pub struct MlSystem {
    pub cfg: MlcnnConfig,
    engine: CorrEngine,
    h: usize,
    w: usize,
}

impl MlSystem {
    pub fn new(cfg: MlcnnConfig, h: usize, w: usize) -> Self {
        for &k in &cfg.kernel_sizes {
            assert!(k >= 1 && k <= h && k <= w);
        }
        let engine = CorrEngine::new(h, w, cfg.boundary, cfg.precision);
        MlSystem { cfg, engine, h, w }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    /// Forward pass keeping all intermediates.
    pub fn forward_full(&self, stack: &LayerStack, img: &Field2D) -> MlForward {
        assert_eq!(stack.kernels.len(), self.cfg.layers());
        assert_eq!(img.shape(), (self.h, self.w));
        let p = self.cfg.precision;
        let mut images = vec![img.clone()];
        let mut pres = Vec::with_capacity(self.cfg.layers());
        for k in &stack.kernels {
            let prepared = self.engine.prepare(images.last().unwrap().clone());
            let pre = self.engine.xcorr_same(k, &prepared);
            let act = Field2D::new(
                pre.values()
                    .iter()
                    .map(|&u| p.round(swish(u, self.cfg.beta)))
                    .collect(),
                self.h,
                self.w,
            );
            pres.push(pre);
            images.push(act);
        }
        let pooled = det_sum(images.last().unwrap().values(), p);
        let yhat = p.round(sigmoid(pooled));
        MlForward { images, pres, yhat }
    }

    pub fn forward(&self, stack: &LayerStack, img: &Field2D) -> f64 {
        self.forward_full(stack, img).yhat
    }

    /// Cross-entropy of one sample plus the full weight-decay term.
    pub fn sample_loss(&self, stack: &LayerStack, img: &Field2D, y: f64) -> LossEval {
        let fw = self.forward_full(stack, img);
        let p = self.cfg.precision;
        let ce = self.cross_entropy(fw.yhat, y);
        let reg = p.round(0.5 * self.cfg.alpha * self.reg_sum(stack));
        LossEval {
            total: p.round(ce + reg),
            yhat: fw.yhat,
            clamped: !(YHAT_CLAMP..=1.0 - YHAT_CLAMP).contains(&fw.yhat),
        }
    }

    /// Residual `yhat - y` differentiated through the clamped prediction, so a
    /// saturated sigmoid still leaves a (tiny) nonzero data term; an exact zero
    /// can pin the weights onto a saddle when `dt * alpha = 1`.
    fn clamped_residual(&self, yhat: f64, y: f64) -> f64 {
        yhat.clamp(YHAT_CLAMP, 1.0 - YHAT_CLAMP) - y
    }

    fn cross_entropy(&self, yhat: f64, y: f64) -> f64 {
        let p = self.cfg.precision;
        let yc = yhat.clamp(YHAT_CLAMP, 1.0 - YHAT_CLAMP);
        p.round(-(y * yc.ln() + (1.0 - y) * (1.0 - yc).ln()))
    }

    fn reg_sum(&self, stack: &LayerStack) -> f64 {
        let p = self.cfg.precision;
        let mut total = 0.0;
        for k in &stack.kernels {
            let sq: Vec<f64> = k.values().iter().map(|&v| p.round(v * v)).collect();
            total += det_sum(&sq, p);
        }
        total
    }

    /// Gradients of the one-sample loss with respect to every kernel, by
    /// reverse accumulation; includes the `alpha K_i` term.
    pub fn sample_grad(&self, stack: &LayerStack, img: &Field2D, y: f64) -> Vec<Field2D> {
        let fw = self.forward_full(stack, img);
        let p = self.cfg.precision;
        let a = p.round(self.clamped_residual(fw.yhat, y));
        let seed = Field2D::constant(self.h, self.w, a);
        let mut grads = self.backward(stack, &fw, seed);
        for (g, k) in grads.iter_mut().zip(&stack.kernels) {
            for (gi, &ki) in g.values_mut().iter_mut().zip(k.values()) {
                *gi = p.round(*gi + p.round(self.cfg.alpha * ki));
            }
        }
        grads
    }

    /// Reverse accumulation of `d pooled-loss / d K_i` from an upstream field
    /// `d L / d I_{N+1}` (no regularization term).
    fn backward(&self, stack: &LayerStack, fw: &MlForward, upstream: Field2D) -> Vec<Field2D> {
        let p = self.cfg.precision;
        let n = stack.kernels.len();
        let mut grads = vec![Field2D::zeros(1, 1); n];
        let mut d = upstream;
        for i in (0..n).rev() {
            let g = Field2D::new(
                d.values()
                    .iter()
                    .zip(fw.pres[i].values())
                    .map(|(&di, &u)| p.round(di * p.round(swish_prime(u, self.cfg.beta))))
                    .collect(),
                self.h,
                self.w,
            );
            let prepared = self.engine.prepare(fw.images[i].clone());
            let (kh, kw) = stack.kernels[i].shape();
            grads[i] = self.engine.xcorr_window(&g, &prepared, kh, kw);
            if i > 0 {
                d = self.engine.conv_back(&g, &stack.kernels[i]);
            }
        }
        grads
    }

    /// Mean cross-entropy over the dataset plus the weight-decay term.
    pub fn dataset_loss(&self, stack: &LayerStack, data: &[(Field2D, f64)]) -> f64 {
        assert!(!data.is_empty());
        let p = self.cfg.precision;
        let mut acc = 0.0;
        for (img, y) in data {
            let fw = self.forward_full(stack, img);
            acc += self.cross_entropy(fw.yhat, *y);
        }
        let ce = p.round(acc / data.len() as f64);
        let reg = p.round(0.5 * self.cfg.alpha * self.reg_sum(stack));
        p.round(ce + reg)
    }

    /// Full-batch gradient: deterministic ordered mean of per-sample
    /// cross-entropy gradients, plus `alpha K_i` once.
    pub fn dataset_grad(&self, stack: &LayerStack, data: &[(Field2D, f64)]) -> Vec<Field2D> {
        assert!(!data.is_empty());
        let p = self.cfg.precision;
        let n = stack.kernels.len();
        let mut acc: Vec<Field2D> = stack
            .kernels
            .iter()
            .map(|k| Field2D::zeros(k.height(), k.width()))
            .collect();
        for (img, y) in data {
            let fw = self.forward_full(stack, img);
            let a = p.round(self.clamped_residual(fw.yhat, *y));
            let seed = Field2D::constant(self.h, self.w, a);
            let gs = self.backward(stack, &fw, seed);
            for (ai, gi) in acc.iter_mut().zip(&gs) {
                for (av, &gv) in ai.values_mut().iter_mut().zip(gi.values()) {
                    *av += gv;
                }
            }
        }
        let m = data.len() as f64;
        for i in 0..n {
            for (av, &kv) in acc[i].values_mut().iter_mut().zip(stack.kernels[i].values()) {
                *av = p.round(p.round(*av / m) + p.round(self.cfg.alpha * kv));
            }
        }
        acc
    }

    /// Full-batch gradient descent with the configured step size, recording
    /// the dataset loss per iteration.
    pub fn gd_run(
        &self,
        stack0: &LayerStack,
        data: &[(Field2D, f64)],
        steps: usize,
        classify: &ClassifyParams,
    ) -> (TrajectoryRecord, Classification, LayerStack) {
        let p = self.cfg.precision;
        let mut stack = stack0.clone();
        let mut rec = TrajectoryRecord::new();
        let mut diverged = false;
        for _ in 0..steps {
            let loss = self.dataset_loss(&stack, data);
            let grads = self.dataset_grad(&stack, data);
            let ginf = grads.iter().map(|g| g.sup_norm()).fold(0.0, f64::max);
            rec.push(loss, ginf, stack.sup_norm());
            for (k, g) in stack.kernels.iter_mut().zip(&grads) {
                for (kv, &gv) in k.values_mut().iter_mut().zip(g.values()) {
                    *kv = p.round(*kv - p.round(self.cfg.dt * gv));
                }
            }
            if !stack.all_finite() || stack.sup_norm() > DIVERGENCE_SUP || !loss.is_finite() {
                diverged = true;
                rec.push(f64::INFINITY, f64::INFINITY, stack.sup_norm());
                break;
            }
        }
        let class = if diverged {
            Classification::Unstable
        } else {
            classify_trajectory(&rec, classify)
        };
        (rec, class, stack)
    }

    /// Per-pixel regime factor of the layer-`i + 1` Jacobian
    /// `grad_{I_{i+1}} F_{i+1}(x, z) ~ factor(x) * K_{i+1}(z - x)`:
    /// 1 where the pre-activation is strongly positive, 1/2 elsewhere.
    /// `layer` is 0-based and must have a next layer.
    pub fn regime_jacobian(&self, stack: &LayerStack, img: &Field2D, layer: usize, tau: f64) -> Field2D {
        assert!(layer + 1 < stack.kernels.len(), "needs a downstream layer");
        assert!(tau > 0.0);
        let fw = self.forward_full(stack, img);
        let pre = &fw.pres[layer + 1];
        Field2D::new(
            pre.values()
                .iter()
                .map(|&u| if self.cfg.beta * u > tau { 1.0 } else { 0.5 })
                .collect(),
            self.h,
            self.w,
        )
    }

    /// Averaged downstream gradient field
    /// `grad-bar_{I_{layer+1}} F_{N,layer+1}(I_{layer+1})` by reverse
    /// accumulation from a unit seed (no label factor).
    pub fn downstream_gradient(&self, stack: &LayerStack, img: &Field2D, layer: usize) -> Field2D {
        assert!(layer < stack.kernels.len());
        let fw = self.forward_full(stack, img);
        let p = self.cfg.precision;
        let mut d = Field2D::constant(self.h, self.w, 1.0);
        for j in (layer + 1..stack.kernels.len()).rev() {
            let g = Field2D::new(
                d.values()
                    .iter()
                    .zip(fw.pres[j].values())
                    .map(|(&di, &u)| p.round(di * p.round(swish_prime(u, self.cfg.beta))))
                    .collect(),
                self.h,
                self.w,
            );
            d = self.engine.conv_back(&g, &stack.kernels[j]);
        }
        d
    }

    /// Constant approximation `gamma` of the averaged downstream gradient:
    /// spatial mean, or the maximum-magnitude entry when `stringent` (the
    /// "most stringent stability conditions" choice).
    pub fn gamma(&self, stack: &LayerStack, img: &Field2D, layer: usize, stringent: bool) -> f64 {
        let d = self.downstream_gradient(stack, img, layer);
        if stringent {
            d.values()
                .iter()
                .copied()
                .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
                .unwrap()
        } else {
            d.values().iter().sum::<f64>() / (self.h * self.w) as f64
        }
    }

    /// `a_hat = gamma * (yhat - y)` for the layer-isolated linearization.
    pub fn effective_a(&self, stack: &LayerStack, img: &Field2D, layer: usize, y: f64, stringent: bool) -> f64 {
        let yhat = self.forward(stack, img);
        self.gamma(stack, img, layer, stringent) * (yhat - y)
    }

    /// One-layer stability bounds of layer `layer` in isolation: the spectrum
    /// of that layer's input and the effective `a`.
    pub fn layer_bounds(&self, stack: &LayerStack, img: &Field2D, layer: usize, y: f64) -> StabilityBounds {
        let fw = self.forward_full(stack, img);
        let a_hat = self.gamma(stack, img, layer, false) * (fw.yhat - y);
        let prepared = self.engine.prepare(fw.images[layer].clone());
        let power = self.engine.image_power(&prepared);
        stability_bounds(&power, a_hat, self.cfg.beta, self.cfg.dt)
    }
}

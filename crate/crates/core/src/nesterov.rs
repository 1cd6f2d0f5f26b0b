//! Nesterov accelerated gradient descent as the semi-implicit discretization
//! of the damped momentum PDE, with its gradient amplifier `z(omega)` and
//! stability bounds.
//!
//! The two-stage update is
//! `V^n = K^n + mu (K^n - K^{n-1})` with `mu = (2 - d dt)/(2 + d dt)`, then
//! `K^{n+1} = V^n - (2 dt^2 / (2 + d dt)) grad L(V^n)`.

use crate::cnn1::{
    linear::power_extremes, Cnn1System, LinearCnn1, Regime, Scheme, StabilityBounds,
    DIVERGENCE_SUP,
};
use crate::numkit::Field2D;
use crate::probes::{classify_trajectory, growth_probe, Classification, ClassifyParams, TrajectoryRecord};

/// Momentum configuration. `mu` is the user-facing knob; the damping
/// coefficient `d` of the underlying PDE is derived and never stored.
#[derive(Debug, Clone, Copy)]
pub struct NesterovConfig {
    /// Momentum coefficient in `[0, 1)`.
    pub mu: f64,
    /// Step size of the semi-implicit scheme.
    pub dt: f64,
}

impl NesterovConfig {
    pub fn from_mu(mu: f64, dt: f64) -> Self {
        assert!((0.0..1.0).contains(&mu), "momentum must be in [0, 1)");
        assert!(dt > 0.0);
        NesterovConfig { mu, dt }
    }

    /// Configuration from the damping coefficient `d > 0` of the momentum
    /// PDE: `mu = (2 - d dt)/(2 + d dt)`.
    pub fn from_damping(d: f64, dt: f64) -> Self {
        assert!(d > 0.0, "damping must be positive");
        let mu = (2.0 - d * dt) / (2.0 + d * dt);
        NesterovConfig::from_mu(mu.max(0.0), dt)
    }

    /// Damping coefficient recovered from `mu`.
    pub fn damping(&self) -> f64 {
        2.0 * (1.0 - self.mu) / (self.dt * (1.0 + self.mu))
    }

    /// Gradient coefficient `2 dt^2 / (2 + d dt) = dt^2 (1 + mu) / 2`.
    pub fn grad_scale(&self) -> f64 {
        self.dt * self.dt * (1.0 + self.mu) / 2.0
    }
}

/// Two-point iterate of the momentum recursion.
#[derive(Debug, Clone)]
pub struct NesterovState {
    pub kernel: Field2D,
    pub kernel_prev: Field2D,
    pub iteration: usize,
    pub diverged: bool,
}

impl NesterovState {
    /// Zero initial velocity: `K_prev = K_0`.
    pub fn new(k0: Field2D) -> Self {
        NesterovState {
            kernel_prev: k0.clone(),
            kernel: k0,
            iteration: 0,
            diverged: false,
        }
    }
}

/// One semi-implicit step; `grad` is evaluated at the look-ahead point `V^n`,
/// which is returned alongside the new iterate.
pub fn nesterov_step<G>(st: &NesterovState, cfg: &NesterovConfig, mut grad: G) -> (NesterovState, Field2D)
where
    G: FnMut(&Field2D) -> Field2D,
{
    let (h, w) = st.kernel.shape();
    let v = Field2D::new(
        st.kernel
            .values()
            .iter()
            .zip(st.kernel_prev.values())
            .map(|(&k, &kp)| k + cfg.mu * (k - kp))
            .collect(),
        h,
        w,
    );
    let g = grad(&v);
    let s = cfg.grad_scale();
    let next = Field2D::new(
        v.values()
            .iter()
            .zip(g.values())
            .map(|(&vi, &gi)| vi - s * gi)
            .collect(),
        h,
        w,
    );
    let diverged = !next.all_finite() || next.sup_norm() > DIVERGENCE_SUP;
    (
        NesterovState {
            kernel_prev: st.kernel.clone(),
            kernel: next,
            iteration: st.iteration + 1,
            diverged,
        },
        v,
    )
}

/// Run the momentum scheme on the nonlinear one-layer model, recording the
/// loss trajectory.
pub fn nesterov_run(
    sys: &Cnn1System,
    cfg: &NesterovConfig,
    k0: &Field2D,
    steps: usize,
    classify: &ClassifyParams,
) -> (TrajectoryRecord, Classification, NesterovState) {
    let mut st = NesterovState::new(k0.clone());
    let mut rec = TrajectoryRecord::new();
    for _ in 0..steps {
        let l = sys.loss(&st.kernel);
        let (next, v) = nesterov_step(&st, cfg, |k| sys.grad(k));
        let _ = v;
        rec.push(l.total, f64::NAN, st.kernel.sup_norm());
        st = next;
        if st.diverged {
            rec.push(f64::INFINITY, f64::NAN, st.kernel.sup_norm());
            break;
        }
    }
    let class = if st.diverged {
        Classification::Unstable
    } else {
        classify_trajectory(&rec, classify)
    };
    (rec, class, st)
}

/// Per-frequency gradient amplifier `z(omega) = alpha + (1/2) a beta
/// |I_hat(omega)|^2`; the gradient-descent amplifier is `A = 1 - dt z`.
pub fn gradient_amplifier(power: &Field2D, a: f64, beta: f64, alpha: f64) -> Field2D {
    let (h, w) = power.shape();
    Field2D::new(
        power
            .values()
            .iter()
            .map(|&p| alpha + 0.5 * a * beta * p)
            .collect(),
        h,
        w,
    )
}

/// Stability bounds of the semi-implicit scheme:
/// `alpha_max = 4/(3 dt^2) - (1/2) a beta min |I_hat|^2`, `alpha_min` as in
/// gradient descent, and `dt_max(alpha) = 2 / sqrt(3 max z)`.
pub fn nesterov_bounds(power: &Field2D, a: f64, beta: f64, dt: f64) -> StabilityBounds {
    let (z_lo_extra, z_hi_extra) = power_extremes(power, a, beta);
    StabilityBounds::closed_form(
        Regime::Transitioning,
        -z_lo_extra,
        4.0 / (3.0 * dt * dt) - z_hi_extra,
        z_hi_extra,
    )
    .with_scheme(Scheme::Nesterov)
}

/// Growth-probe classification of the scalar semi-implicit recursion on a
/// single gradient-amplifier value `z`.
pub fn nesterov_mode_probe(z: f64, cfg: &NesterovConfig, budget: usize) -> Classification {
    let s = cfg.grad_scale();
    let mut x = 1.0f64;
    let mut x_prev = 1.0f64;
    growth_probe(1.0, budget, || {
        let v = x + cfg.mu * (x - x_prev);
        let next = v - s * z * v;
        x_prev = x;
        x = next;
        x.abs()
    })
}

/// Growth-probe classification of the windowed linear field flow under the
/// momentum scheme; `flow.rhs` is `-grad` of the linearized loss.
pub fn nesterov_linear_probe(
    flow: &LinearCnn1,
    cfg: &NesterovConfig,
    k0: &Field2D,
    budget: usize,
) -> Classification {
    let mut st = NesterovState::new(k0.clone());
    let init = k0.sup_norm();
    growth_probe(init, budget, || {
        let (next, _) = nesterov_step(&st, cfg, |k| {
            let r = flow.rhs(k);
            let (h, w) = r.shape();
            Field2D::new(r.values().iter().map(|v| -v).collect(), h, w)
        });
        st = next;
        st.kernel.sup_norm()
    })
}

//! Pedagogical PDE discretizations: the 1-D heat equation with its CFL
//! condition, and the Beltrami reaction-diffusion flow whose over-driven
//! discretization exhibits restrained instability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numkit::Field1D;

/// Forward-Euler heat equation setup with fixed (Dirichlet) endpoints.
#[derive(Debug, Clone)]
pub struct HeatConfig {
    pub kappa: f64,
    pub dx: f64,
    pub dt: f64,
    pub steps: usize,
    pub u0: Field1D,
    /// Endpoint values held fixed throughout the evolution.
    pub bc: (f64, f64),
}

impl HeatConfig {
    /// Grid ratio `kappa*dt/dx^2` that the CFL condition constrains to 1/2.
    pub fn ratio(&self) -> f64 {
        self.kappa * self.dt / (self.dx * self.dx)
    }

    /// Triangle initial condition on [0, 30] with u(0) = u(30) = 0, dx = 1,
    /// step size chosen so that `kappa*dt/dx^2 = ratio`.
    pub fn triangle(ratio: f64, steps: usize) -> Self {
        let n = 31;
        let mid = 15.0;
        let values = (0..n)
            .map(|j| 1.0 - (j as f64 - mid).abs() / mid)
            .collect();
        HeatConfig {
            kappa: 1.0,
            dx: 1.0,
            dt: ratio,
            steps,
            u0: Field1D::new(values, 1.0),
            bc: (0.0, 0.0),
        }
    }
}

/// One forward-Euler step with second-order central differences in space.
/// Interior points update; endpoints are pinned at `cfg.bc`.
pub fn heat_step(u: &Field1D, cfg: &HeatConfig) -> Field1D {
    let n = u.len();
    let r = cfg.ratio();
    let v = &u.values;
    let mut out = v.clone();
    for j in 1..n - 1 {
        out[j] = v[j] + r * (v[j + 1] - 2.0 * v[j] + v[j - 1]);
    }
    out[0] = cfg.bc.0;
    out[n - 1] = cfg.bc.1;
    Field1D::new(out, u.dx)
}

/// Periodic variant used for the per-frequency amplifier equivalence check.
pub fn heat_step_periodic(u: &Field1D, cfg: &HeatConfig) -> Field1D {
    let n = u.len();
    let r = cfg.ratio();
    let v = &u.values;
    let mut out = vec![0.0; n];
    for j in 0..n {
        let prev = v[(j + n - 1) % n];
        let next = v[(j + 1) % n];
        out[j] = v[j] + r * (next - 2.0 * v[j] + prev);
    }
    Field1D::new(out, u.dx)
}

/// Amplifier `A(omega) = 1 - (2*kappa*dt/dx^2) * (1 - cos(omega*dx))`.
pub fn heat_amplifier(omega: f64, cfg: &HeatConfig) -> f64 {
    1.0 - 2.0 * cfg.ratio() * (1.0 - (omega * cfg.dx).cos())
}

/// CFL bound `dt < dx^2/(2*kappa)` for the explicit heat scheme.
pub fn heat_cfl_max_dt(cfg: &HeatConfig) -> f64 {
    cfg.dx * cfg.dx / (2.0 * cfg.kappa)
}

/// Run the heat evolution, recording `sup|u|` per iteration.
/// Stops early once the state blows past `1e12` or goes non-finite.
pub fn heat_run(cfg: &HeatConfig) -> PdeRun {
    let mut u = cfg.u0.clone();
    let mut series = Vec::with_capacity(cfg.steps + 1);
    series.push(u.sup_norm());
    let mut diverged = false;
    for _ in 0..cfg.steps {
        u = heat_step(&u, cfg);
        let s = u.sup_norm();
        series.push(s);
        if !s.is_finite() || s > 1e12 {
            diverged = true;
            break;
        }
    }
    PdeRun {
        series,
        final_state: u,
        diverged,
    }
}

/// Trajectory of a scalar observable plus the final state.
#[derive(Debug, Clone)]
pub struct PdeRun {
    /// Observable per iteration: `sup|u|` for heat, the loss for Beltrami.
    pub series: Vec<f64>,
    pub final_state: Field1D,
    pub diverged: bool,
}

/// Beltrami reaction-diffusion flow
/// `du/dt = d/dx( u_x / sqrt(u_x^2 + delta^2) ) + lambda (I - u)`.
#[derive(Debug, Clone)]
pub struct BeltramiConfig {
    pub delta: f64,
    pub lambda: f64,
    pub dx: f64,
    pub dt: f64,
    pub steps: usize,
    /// Target signal I.
    pub target: Field1D,
    pub u0: Field1D,
}

impl BeltramiConfig {
    /// Strict (worst-case over x) stable step `1/(lambda + 2/(delta*dx^2))`;
    /// approximately `delta*dx^2/2` for small lambda.
    pub fn strict_dt(&self) -> f64 {
        1.0 / (self.lambda + 2.0 / (self.delta * self.dx * self.dx))
    }

    /// Default 1-D test signal: a unit step plus uniform noise of amplitude
    /// 0.05 on 256 points. The flow starts from the noisy signal itself.
    pub fn noisy_step(delta: f64, lambda: f64, dt: f64, steps: usize, seed: u64) -> Self {
        let n = 256;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..n)
            .map(|j| {
                let base = if j < n / 2 { 0.0 } else { 1.0 };
                base + rng.random_range(-0.05..0.05)
            })
            .collect();
        let target = Field1D::new(values, 1.0);
        BeltramiConfig {
            delta,
            lambda,
            dx: 1.0,
            dt,
            steps,
            u0: target.clone(),
            target,
        }
    }
}

fn forward_diffs(u: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    let mut d = vec![0.0; n];
    for j in 0..n - 1 {
        d[j] = (u[j + 1] - u[j]) / dx;
    }
    d
}

/// Discrete loss `sum_j [ lambda/2 (I_j - u_j)^2 + sqrt(d_j^2 + delta^2) ] dx`
/// with forward differences `d_j` (the last point contributes the constant
/// `delta` term). The step function below is the exact gradient flow of this
/// quadrature.
pub fn beltrami_loss(u: &Field1D, cfg: &BeltramiConfig) -> f64 {
    let d = forward_diffs(&u.values, cfg.dx);
    let mut acc = 0.0;
    for j in 0..u.len() {
        let fid = cfg.target.values[j] - u.values[j];
        acc += (0.5 * cfg.lambda * fid * fid + (d[j] * d[j] + cfg.delta * cfg.delta).sqrt())
            * cfg.dx;
    }
    acc
}

/// One forward-Euler step of the conservative staggered-flux discretization.
/// Fluxes live at half-points; the boundary fluxes are zero.
pub fn beltrami_step(u: &Field1D, cfg: &BeltramiConfig) -> Field1D {
    let n = u.len();
    let d = forward_diffs(&u.values, cfg.dx);
    let flux: Vec<f64> = d
        .iter()
        .map(|&g| g / (g * g + cfg.delta * cfg.delta).sqrt())
        .collect();
    let mut out = vec![0.0; n];
    for j in 0..n {
        let f_right = if j < n - 1 { flux[j] } else { 0.0 };
        let f_left = if j > 0 { flux[j - 1] } else { 0.0 };
        let div = (f_right - f_left) / cfg.dx;
        let fid = cfg.lambda * (cfg.target.values[j] - u.values[j]);
        out[j] = u.values[j] + cfg.dt * (div + fid);
    }
    Field1D::new(out, u.dx)
}

/// Per-point stable step bound `1/(lambda + 2*kappa_j/dx^2)` with the
/// linearized diffusivity `kappa_j = 1/sqrt(d_j^2 + delta^2)`, plus the
/// strict worst-case bound.
pub fn beltrami_local_cfl(u: &Field1D, cfg: &BeltramiConfig) -> (Field1D, f64) {
    let d = forward_diffs(&u.values, cfg.dx);
    let bounds = d
        .iter()
        .map(|&g| {
            let kappa = 1.0 / (g * g + cfg.delta * cfg.delta).sqrt();
            1.0 / (cfg.lambda + 2.0 * kappa / (cfg.dx * cfg.dx))
        })
        .collect();
    (Field1D::new(bounds, u.dx), cfg.strict_dt())
}

/// Run the Beltrami flow, recording the loss per iteration.
pub fn beltrami_run(cfg: &BeltramiConfig) -> PdeRun {
    let mut u = cfg.u0.clone();
    let init_norm = u.sup_norm().max(1.0);
    let mut series = Vec::with_capacity(cfg.steps + 1);
    series.push(beltrami_loss(&u, cfg));
    let mut diverged = false;
    for _ in 0..cfg.steps {
        u = beltrami_step(&u, cfg);
        let s = u.sup_norm();
        if !u.all_finite() || s > 1e9 * init_norm {
            diverged = true;
            series.push(f64::INFINITY);
            break;
        }
        series.push(beltrami_loss(&u, cfg));
    }
    PdeRun {
        series,
        final_state: u,
        diverged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_is_a_heat_fixed_point() {
        let cfg = HeatConfig {
            kappa: 1.0,
            dx: 1.0,
            dt: 0.4,
            steps: 1,
            u0: Field1D::new(vec![2.0; 10], 1.0),
            bc: (2.0, 2.0),
        };
        let u = heat_step(&cfg.u0, &cfg);
        assert_eq!(u.values, cfg.u0.values);
    }

    #[test]
    fn heat_amplifier_closed_forms() {
        let mut cfg = HeatConfig::triangle(0.4, 1);
        assert!((heat_amplifier(0.0, &cfg) - 1.0).abs() < 1e-15);
        // Nyquist: omega*dx = pi -> A = 1 - 4r
        let a = heat_amplifier(std::f64::consts::PI, &cfg);
        assert!((a - (1.0 - 4.0 * 0.4)).abs() < 1e-12);
        assert!(a.abs() < 1.0);
        cfg.dt = 0.8;
        let a = heat_amplifier(std::f64::consts::PI, &cfg);
        assert!((a - (1.0 - 4.0 * 0.8)).abs() < 1e-12);
        assert!(a.abs() > 1.0);
    }

    #[test]
    fn heat_cfl_bound_values() {
        let mut cfg = HeatConfig::triangle(0.4, 1);
        assert_eq!(heat_cfl_max_dt(&cfg), 0.5);
        cfg.kappa = 2.0;
        assert_eq!(heat_cfl_max_dt(&cfg), 0.25);
    }

    #[test]
    fn cfl_bound_matches_amplifier_sweep() {
        // max over the discrete frequency grid of |A| < 1 iff dt below bound
        let n = 64usize;
        for &(dt, stable) in &[(0.49, true), (0.51, false)] {
            let cfg = HeatConfig {
                kappa: 1.0,
                dx: 1.0,
                dt,
                steps: 1,
                u0: Field1D::zeros(n, 1.0),
                bc: (0.0, 0.0),
            };
            let worst = (1..n)
                .map(|k| heat_amplifier(2.0 * std::f64::consts::PI * k as f64 / n as f64, &cfg).abs())
                .fold(0.0f64, f64::max);
            assert_eq!(worst < 1.0, stable, "dt={dt} worst={worst}");
        }
    }

    #[test]
    fn stable_heat_decays_unstable_blows_up() {
        let run = heat_run(&HeatConfig::triangle(0.4, 2000));
        assert!(!run.diverged);
        assert!(run.final_state.sup_norm() < 1e-3);

        let run = heat_run(&HeatConfig::triangle(0.8, 2000));
        assert!(run.series.iter().any(|&s| s > 1e6));
    }

    #[test]
    fn beltrami_loss_closed_forms() {
        let n = 64;
        let cfg = BeltramiConfig {
            delta: 1.0,
            lambda: 0.3,
            dx: 1.0,
            dt: 0.001,
            steps: 1,
            target: Field1D::zeros(n, 1.0),
            u0: Field1D::zeros(n, 1.0),
        };
        // u = I = 0 -> integrand reduces to delta -> L = n * dx * delta
        assert!((beltrami_loss(&cfg.u0, &cfg) - n as f64).abs() < 1e-12);
    }

    #[test]
    fn beltrami_loss_matches_slow_reeval() {
        let cfg = BeltramiConfig::noisy_step(0.01, 0.1, 1e-3, 1, 9);
        let u = Field1D::new(
            cfg.u0.values.iter().map(|v| v * 0.7 + 0.1).collect(),
            1.0,
        );
        // independent slow re-evaluation of the quadrature
        let mut expect = 0.0;
        for j in 0..u.len() {
            let du = if j + 1 < u.len() {
                (u.values[j + 1] - u.values[j]) / cfg.dx
            } else {
                0.0
            };
            expect += 0.5 * cfg.lambda * (cfg.target.values[j] - u.values[j]).powi(2) * cfg.dx;
            expect += (du * du + cfg.delta * cfg.delta).sqrt() * cfg.dx;
        }
        let got = beltrami_loss(&u, &cfg);
        assert!((got - expect).abs() <= 1e-12 * expect.abs());
    }

    #[test]
    fn constant_state_is_a_beltrami_fixed_point() {
        let n = 32;
        let cfg = BeltramiConfig {
            delta: 0.01,
            lambda: 0.5,
            dx: 1.0,
            dt: 0.004,
            steps: 1,
            target: Field1D::new(vec![1.5; n], 1.0),
            u0: Field1D::new(vec![1.5; n], 1.0),
        };
        let u = beltrami_step(&cfg.u0, &cfg);
        for v in &u.values {
            assert!((v - 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn local_cfl_closed_forms() {
        let n = 16;
        let cfg = BeltramiConfig {
            delta: 0.01,
            lambda: 0.0,
            dx: 1.0,
            dt: 1e-3,
            steps: 1,
            target: Field1D::zeros(n, 1.0),
            u0: Field1D::zeros(n, 1.0),
        };
        let (per_point, strict) = beltrami_local_cfl(&cfg.u0, &cfg);
        // flat u: kappa = 1/delta everywhere
        let expect = 1.0 / (cfg.lambda + 2.0 / (cfg.delta));
        for b in &per_point.values {
            assert!((b - expect).abs() < 1e-15);
        }
        assert!((strict - 0.005).abs() < 1e-6);

        // steep gradient: bound approaches 1/lambda
        let mut cfg2 = cfg.clone();
        cfg2.lambda = 2.0;
        let steep = Field1D::new((0..n).map(|j| 1e9 * j as f64).collect(), 1.0);
        let (b2, _) = beltrami_local_cfl(&steep, &cfg2);
        assert!((b2.values[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn loss_monotone_at_strict_dt() {
        let mut cfg = BeltramiConfig::noisy_step(0.01, 0.1, 0.0, 10_000, 4);
        cfg.dt = cfg.strict_dt();
        let run = beltrami_run(&cfg);
        assert!(!run.diverged);
        for w in run.series.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "loss increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn gross_overdrive_blows_up() {
        // The saturating flux bounds the diffusion term, so true blow-up
        // comes from the reaction term once lambda*dt > 2; at 1000x the
        // strict step with lambda = 1 that threshold is far exceeded.
        let mut cfg = BeltramiConfig::noisy_step(0.01, 1.0, 0.0, 20_000, 4);
        cfg.dt = 1000.0 * cfg.strict_dt();
        assert!(cfg.lambda * cfg.dt > 2.0);
        let run = beltrami_run(&cfg);
        assert!(run.diverged || run.final_state.sup_norm() > 1e9);
    }

    #[test]
    fn moderate_overdrive_stays_bounded() {
        // 10x and 100x only overdrive the saturating diffusion term
        // (lambda*dt < 1): the state oscillates but never escapes.
        for m in [10.0, 100.0] {
            let mut cfg = BeltramiConfig::noisy_step(0.01, 1.0, 0.0, 5_000, 4);
            cfg.dt = m * cfg.strict_dt();
            assert!(cfg.lambda * cfg.dt < 1.0);
            let run = beltrami_run(&cfg);
            assert!(!run.diverged);
            assert!(run.final_state.sup_norm() < 1e3);
        }
    }
}

//! Linearized kernel flows around `K = 0`, their per-frequency amplifier, and
//! the closed-form stability bounds of the three activation regimes.

use crate::numkit::{dft2, Fft2, Field2D, C64};

/// Activation regime of the pre-activation `beta * (K * I)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `|beta u| <= tau`: Swish is in its curved region, `r'' ~ beta/2`.
    Transitioning,
    /// `beta u > tau`: Swish acts as the identity.
    Activated,
    /// `beta u < -tau`: Swish acts as zero.
    NotActivated,
}

/// Per-pixel regime labels with their counts.
#[derive(Debug, Clone)]
pub struct RegimeMap {
    pub labels: Vec<Regime>,
    pub h: usize,
    pub w: usize,
    pub transitioning: usize,
    pub activated: usize,
    pub not_activated: usize,
}

impl RegimeMap {
    pub fn from_preactivation(pre: &Field2D, beta: f64, tau: f64) -> Self {
        let (h, w) = pre.shape();
        let mut m = RegimeMap {
            labels: Vec::with_capacity(h * w),
            h,
            w,
            transitioning: 0,
            activated: 0,
            not_activated: 0,
        };
        for &u in pre.values() {
            let bu = beta * u;
            let r = if bu > tau {
                m.activated += 1;
                Regime::Activated
            } else if bu < -tau {
                m.not_activated += 1;
                Regime::NotActivated
            } else {
                m.transitioning += 1;
                Regime::Transitioning
            };
            m.labels.push(r);
        }
        m
    }
}

/// Per-frequency growth factor of a discretized linear update.
#[derive(Debug, Clone)]
pub struct AmplifierSpectrum {
    /// `A(omega)` on the discrete frequency grid of the image.
    pub a: Field2D,
}

impl AmplifierSpectrum {
    pub fn max_abs(&self) -> f64 {
        self.a.sup_norm()
    }

    /// True when every mode satisfies `|A| <= 1`.
    pub fn stable(&self) -> bool {
        self.max_abs() <= 1.0
    }
}

/// `A(omega) = 1 - dt (alpha + (1/2) a beta |I_hat(omega)|^2)`.
pub fn amplifier(power: &Field2D, a: f64, beta: f64, alpha: f64, dt: f64) -> AmplifierSpectrum {
    let (h, w) = power.shape();
    let values = power
        .values()
        .iter()
        .map(|&p| 1.0 - dt * (alpha + 0.5 * a * beta * p))
        .collect();
    AmplifierSpectrum {
        a: Field2D::new(values, h, w),
    }
}

/// Time discretization a set of stability bounds refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Forward-Euler gradient descent: `dt_max = 2 / max z`.
    GradientDescent,
    /// Semi-implicit Nesterov scheme: `dt_max = 2 / sqrt(3 max z)`.
    Nesterov,
}

/// Weight-decay window and step-size map of one linearized regime.
#[derive(Debug, Clone, Copy)]
pub struct StabilityBounds {
    pub regime: Regime,
    pub scheme: Scheme,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// `max_omega (z(omega) - alpha)`: the curvature part of the binding
    /// step-size constraint.
    z_extra_max: f64,
}

impl StabilityBounds {
    pub(crate) fn closed_form(
        regime: Regime,
        alpha_min: f64,
        alpha_max: f64,
        z_extra_max: f64,
    ) -> Self {
        StabilityBounds {
            regime,
            scheme: Scheme::GradientDescent,
            alpha_min,
            alpha_max,
            z_extra_max,
        }
    }

    pub(crate) fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Largest stable step size at a given weight decay; infinite when every
    /// mode decays on its own.
    pub fn dt_max(&self, alpha: f64) -> f64 {
        let z_max = alpha + self.z_extra_max;
        if z_max <= 0.0 {
            return f64::INFINITY;
        }
        match self.scheme {
            Scheme::GradientDescent => 2.0 / z_max,
            Scheme::Nesterov => 2.0 / (3.0 * z_max).sqrt(),
        }
    }
}

/// Transitioning-regime bounds from the image power spectrum:
/// `alpha_max = 2/dt - (1/2) a beta min |I_hat|^2` and
/// `alpha_min = -(1/2) a beta max |I_hat|^2`.
pub fn stability_bounds(power: &Field2D, a: f64, beta: f64, dt: f64) -> StabilityBounds {
    let min_pow = power.values().iter().copied().fold(f64::INFINITY, f64::min);
    let max_pow = power.values().iter().copied().fold(0.0f64, f64::max);
    // alpha_min = max_omega of -(1/2) a beta p: binding at max power for
    // a < 0 and at min power otherwise (then it is <= 0: automatically met)
    let (lo_pow, hi_pow) = if a >= 0.0 {
        (min_pow, max_pow)
    } else {
        (max_pow, min_pow)
    };
    StabilityBounds {
        regime: Regime::Transitioning,
        scheme: Scheme::GradientDescent,
        alpha_min: -0.5 * a * beta * lo_pow,
        alpha_max: 2.0 / dt - 0.5 * a * beta * hi_pow,
        z_extra_max: 0.5 * a * beta * hi_pow,
    }
}

/// The curvature extremes used by other schemes' bound formulas.
pub(crate) fn power_extremes(power: &Field2D, a: f64, beta: f64) -> (f64, f64) {
    let min_pow = power.values().iter().copied().fold(f64::INFINITY, f64::min);
    let max_pow = power.values().iter().copied().fold(0.0f64, f64::max);
    let (lo_pow, hi_pow) = if a >= 0.0 {
        (min_pow, max_pow)
    } else {
        (max_pow, min_pow)
    };
    (0.5 * a * beta * lo_pow, 0.5 * a * beta * hi_pow)
}

/// Linearized kernel flow `dK/dt = [-(a/2)(I_bar + beta (K*I)*I) - alpha K] W`
/// around `K = 0` with frozen `a`, advanced by forward Euler on the full
/// periodic grid. `(K*I)*I` is evaluated spectrally as `idft(K_hat |I_hat|^2)`.
pub struct LinearCnn1 {
    h: usize,
    w: usize,
    fft: Fft2,
    /// `|I_hat|^2`, row-major.
    power: Vec<f64>,
    pub image_bar: f64,
    pub a: f64,
    pub beta: f64,
    pub alpha: f64,
    pub dt: f64,
    /// Corner window support; None runs the unwindowed flow.
    pub window: Option<(usize, usize)>,
}

impl LinearCnn1 {
    pub fn new(
        image: &Field2D,
        a: f64,
        beta: f64,
        alpha: f64,
        dt: f64,
        window: Option<(usize, usize)>,
    ) -> Self {
        let (h, w) = image.shape();
        let spec = dft2(image);
        LinearCnn1 {
            h,
            w,
            fft: Fft2::new(h, w),
            power: spec.power(),
            image_bar: image.values().iter().sum(),
            a,
            beta,
            alpha,
            dt,
            window,
        }
    }

    pub fn power_field(&self) -> Field2D {
        Field2D::new(self.power.clone(), self.h, self.w)
    }

    /// `(K*I)*I` via the spectral identity.
    fn double_corr(&self, k: &Field2D) -> Field2D {
        let mut buf: Vec<C64> = k.values().iter().map(|&v| C64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        for (c, &p) in buf.iter_mut().zip(&self.power) {
            *c *= p;
        }
        self.fft.inverse(&mut buf);
        Field2D::new(buf.iter().map(|c| c.re).collect(), self.h, self.w)
    }

    fn windowed(&self, mut f: Field2D) -> Field2D {
        if let Some((kh, kw)) = self.window {
            f.apply_window(kh, kw);
        }
        f
    }

    /// Right-hand side of the frozen-`a` linear flow.
    pub fn rhs(&self, k: &Field2D) -> Field2D {
        assert_eq!(k.shape(), (self.h, self.w));
        let kii = self.double_corr(k);
        let mut out = Field2D::new(
            kii.values()
                .iter()
                .zip(k.values())
                .map(|(&c, &ki)| {
                    -0.5 * self.a * (self.image_bar + self.beta * c) - self.alpha * ki
                })
                .collect(),
            self.h,
            self.w,
        );
        if let Some((kh, kw)) = self.window {
            out.apply_window(kh, kw);
        }
        out
    }

    /// Right-hand side with `a = yhat - y` itself linearized around `K = 0`
    /// (`s(0) = 1/2`, `s'(0) = 1/4`); the purely linear part, zero at `K = 0`.
    pub fn rhs_nonconstant_a(&self, k: &Field2D, y: f64) -> Field2D {
        assert_eq!(k.shape(), (self.h, self.w));
        let kii = self.double_corr(k);
        let kbar: f64 = k.values().iter().sum();
        let s0 = 0.5;
        let sp0 = 0.25;
        let forcing = -0.25 * sp0 * self.image_bar * self.image_bar * kbar;
        let out = Field2D::new(
            kii.values()
                .iter()
                .zip(k.values())
                .map(|(&c, &ki)| -0.5 * (s0 - y) * self.beta * c + forcing - self.alpha * ki)
                .collect(),
            self.h,
            self.w,
        );
        self.windowed(out)
    }

    /// One forward-Euler step `K + dt * rhs(K)`.
    pub fn step(&self, k: &Field2D) -> Field2D {
        let rhs = self.rhs(k);
        Field2D::new(
            k.values()
                .iter()
                .zip(rhs.values())
                .map(|(&ki, &ri)| ki + self.dt * ri)
                .collect(),
            self.h,
            self.w,
        )
    }

    /// Amplifier of this flow's unwindowed update.
    pub fn amplifier(&self) -> AmplifierSpectrum {
        amplifier(&self.power_field(), self.a, self.beta, self.alpha, self.dt)
    }

    /// Transitioning-regime bounds for this flow's image and step size.
    pub fn bounds(&self) -> StabilityBounds {
        stability_bounds(&self.power_field(), self.a, self.beta, self.dt)
    }
}

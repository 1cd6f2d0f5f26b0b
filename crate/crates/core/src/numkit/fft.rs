use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::field::Field2D;
use super::C64;

/// 2-D DFT coefficients of an `h x w` field, row-major.
///
/// Convention: unnormalized forward transform (plain double sum); the inverse
/// applies the `1/(HW)` factor. Frequency index `(i, j)` corresponds to
/// `omega = 2*pi*(i/h, j/w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    data: Vec<C64>,
    h: usize,
    w: usize,
}

impl Spectrum2D {
    pub fn new(data: Vec<C64>, h: usize, w: usize) -> Self {
        assert_eq!(data.len(), h * w);
        Spectrum2D { data, h, w }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.w + j]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// `|S(omega)|^2` per frequency.
    pub fn power(&self) -> Vec<f64> {
        self.data.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Fixed-plan 2-D FFT engine for one grid shape.
///
/// The plan is a pure function of the shape, so the same input always takes
/// the same code path and produces the same bits.
pub struct Fft2 {
    h: usize,
    w: usize,
    fwd_row: Arc<dyn Fft<f64>>,
    fwd_col: Arc<dyn Fft<f64>>,
    inv_row: Arc<dyn Fft<f64>>,
    inv_col: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(h: usize, w: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            h,
            w,
            fwd_row: planner.plan_fft_forward(w),
            fwd_col: planner.plan_fft_forward(h),
            inv_row: planner.plan_fft_inverse(w),
            inv_col: planner.plan_fft_inverse(h),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    fn pass(&self, buf: &mut [Complex<f64>], inverse: bool) {
        let (row, col) = if inverse {
            (&self.inv_row, &self.inv_col)
        } else {
            (&self.fwd_row, &self.fwd_col)
        };
        let mut scratch = vec![Complex::default(); row.get_inplace_scratch_len()];
        for r in buf.chunks_exact_mut(self.w) {
            row.process_with_scratch(r, &mut scratch);
        }
        let mut t = transpose(buf, self.h, self.w);
        scratch.resize(col.get_inplace_scratch_len(), Complex::default());
        for c in t.chunks_exact_mut(self.h) {
            col.process_with_scratch(c, &mut scratch);
        }
        let back = transpose(&t, self.w, self.h);
        buf.copy_from_slice(&back);
    }

    /// In-place unnormalized forward transform of a row-major buffer.
    pub fn forward(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.h * self.w);
        self.pass(buf, false);
    }

    /// In-place inverse transform without the `1/(HW)` factor.
    pub fn inverse_unscaled(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.h * self.w);
        self.pass(buf, true);
    }

    /// In-place inverse transform including the `1/(HW)` normalization.
    pub fn inverse(&self, buf: &mut [C64]) {
        self.inverse_unscaled(buf);
        let scale = 1.0 / (self.h * self.w) as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Forward transform of a real field into a fresh complex buffer.
    pub fn forward_field(&self, f: &Field2D) -> Vec<C64> {
        assert_eq!(f.shape(), (self.h, self.w));
        let mut buf: Vec<C64> = f.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }
}

fn transpose(src: &[Complex<f64>], h: usize, w: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::default(); src.len()];
    for i in 0..h {
        for j in 0..w {
            out[j * h + i] = src[i * w + j];
        }
    }
    out
}

/// Unnormalized forward 2-D DFT.
pub fn dft2(f: &Field2D) -> Spectrum2D {
    let (h, w) = f.shape();
    let engine = Fft2::new(h, w);
    Spectrum2D::new(engine.forward_field(f), h, w)
}

/// Inverse 2-D DFT with the `1/(HW)` factor; returns the real part.
pub fn idft2(s: &Spectrum2D) -> Field2D {
    let (h, w) = s.shape();
    let engine = Fft2::new(h, w);
    let mut buf = s.data().to_vec();
    engine.inverse(&mut buf);
    Field2D::new(buf.iter().map(|c| c.re).collect(), h, w)
}

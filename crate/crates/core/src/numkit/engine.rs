use super::fft::Fft2;
use super::field::Field2D;
use super::precision::Precision;
use super::xcorr::{xcorr2, Boundary};
use super::C64;

/// Image area at or above which the periodic path goes through the FFT.
const FFT_MIN_PIXELS: usize = 4096;

/// An image prepared for repeated correlation against many kernels.
pub struct ConvImage {
    img: Field2D,
    /// Forward DFT, present only on the FFT path.
    spec: Option<Vec<C64>>,
}

impl ConvImage {
    pub fn field(&self) -> &Field2D {
        &self.img
    }
}

/// Correlation engine for one grid shape, boundary rule and precision.
///
/// Path selection depends only on (shape, boundary), so identical inputs
/// always produce identical bits. The FFT path computes in double and rounds
/// operation outputs to the requested precision; the direct path rounds every
/// accumulation.
pub struct CorrEngine {
    h: usize,
    w: usize,
    boundary: Boundary,
    precision: Precision,
    fft: Option<Fft2>,
}

impl CorrEngine {
    pub fn new(h: usize, w: usize, boundary: Boundary, precision: Precision) -> Self {
        let fft = if boundary == Boundary::Periodic && h * w >= FFT_MIN_PIXELS {
            Some(Fft2::new(h, w))
        } else {
            None
        };
        CorrEngine {
            h,
            w,
            boundary,
            precision,
            fft,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn uses_fft(&self) -> bool {
        self.fft.is_some()
    }

    pub fn prepare(&self, img: Field2D) -> ConvImage {
        assert_eq!(img.shape(), (self.h, self.w));
        let spec = self.fft.as_ref().map(|f| f.forward_field(&img));
        ConvImage { img, spec }
    }

    /// `|I_hat(omega)|^2` on the discrete frequency grid (computed on demand
    /// when the engine is not on the FFT path).
    pub fn image_power(&self, img: &ConvImage) -> Field2D {
        let spec = match &img.spec {
            Some(s) => s.clone(),
            None => Fft2::new(self.h, self.w).forward_field(&img.img),
        };
        Field2D::new(spec.iter().map(|c| c.norm_sqr()).collect(), self.h, self.w)
    }

    /// `(K * I)(x) = sum_z K(z) I(x + z)`, output the size of the image.
    pub fn xcorr_same(&self, k: &Field2D, img: &ConvImage) -> Field2D {
        match (&self.fft, &img.spec) {
            (Some(fft), Some(ispec)) => {
                let kpad = k.padded_to(self.h, self.w);
                let mut buf = fft.forward_field(&kpad);
                for (c, i) in buf.iter_mut().zip(ispec) {
                    *c = c.conj() * i;
                }
                fft.inverse(&mut buf);
                let mut out = Field2D::new(buf.iter().map(|c| c.re).collect(), self.h, self.w);
                self.precision.round_slice(out.values_mut());
                out
            }
            _ => xcorr2(k, &img.img, self.boundary, self.precision).expect("kernel fits image"),
        }
    }

    /// `sum_x G(x) I(x + z)` for offsets `z` in the `kh x kw` corner window:
    /// the kernel-shaped part of a correlation of a full-size field with the
    /// image.
    pub fn xcorr_window(&self, g: &Field2D, img: &ConvImage, kh: usize, kw: usize) -> Field2D {
        assert_eq!(g.shape(), (self.h, self.w));
        match (&self.fft, &img.spec) {
            (Some(fft), Some(ispec)) => {
                let mut buf = fft.forward_field(g);
                for (c, i) in buf.iter_mut().zip(ispec) {
                    *c = c.conj() * i;
                }
                fft.inverse(&mut buf);
                let mut out = Field2D::zeros(kh, kw);
                for i in 0..kh {
                    for j in 0..kw {
                        *out.at_mut(i, j) = self.precision.round(buf[i * self.w + j].re);
                    }
                }
                out
            }
            _ => {
                let mut out = Field2D::zeros(kh, kw);
                for zi in 0..kh {
                    for zj in 0..kw {
                        let mut acc = 0.0f64;
                        for y in 0..self.h {
                            for x in 0..self.w {
                                let v = match self.boundary {
                                    Boundary::Periodic => {
                                        self.img_at(img, (y + zi) % self.h, (x + zj) % self.w)
                                    }
                                    Boundary::ZeroPad => {
                                        if y + zi < self.h && x + zj < self.w {
                                            self.img_at(img, y + zi, x + zj)
                                        } else {
                                            0.0
                                        }
                                    }
                                };
                                let term = g.at(y, x) * v;
                                acc = match self.precision {
                                    Precision::Double => acc + term,
                                    Precision::Single => (acc as f32 + term as f32) as f64,
                                };
                            }
                        }
                        *out.at_mut(zi, zj) = self.precision.round(acc);
                    }
                }
                out
            }
        }
    }

    /// Adjoint of `xcorr_same` in its first image argument:
    /// `out(x) = sum_z K(z) G(x - z)`; used for input gradients.
    pub fn conv_back(&self, g: &Field2D, k: &Field2D) -> Field2D {
        assert_eq!(g.shape(), (self.h, self.w));
        let (kh, kw) = k.shape();
        assert!(kh <= self.h && kw <= self.w);
        let mut out = Field2D::zeros(self.h, self.w);
        for y in 0..self.h {
            for x in 0..self.w {
                let mut acc = 0.0f64;
                for zi in 0..kh {
                    for zj in 0..kw {
                        let src = match self.boundary {
                            Boundary::Periodic => Some((
                                (y + self.h - zi) % self.h,
                                (x + self.w - zj) % self.w,
                            )),
                            Boundary::ZeroPad => {
                                if y >= zi && x >= zj {
                                    Some((y - zi, x - zj))
                                } else {
                                    None
                                }
                            }
                        };
                        if let Some((sy, sx)) = src {
                            let term = k.at(zi, zj) * g.at(sy, sx);
                            acc = match self.precision {
                                Precision::Double => acc + term,
                                Precision::Single => (acc as f32 + term as f32) as f64,
                            };
                        }
                    }
                }
                *out.at_mut(y, x) = self.precision.round(acc);
            }
        }
        out
    }

    #[inline]
    fn img_at(&self, img: &ConvImage, i: usize, j: usize) -> f64 {
        img.img.at(i, j)
    }
}

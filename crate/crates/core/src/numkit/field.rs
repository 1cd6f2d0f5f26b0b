use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Sampled real-valued function of one variable with uniform grid spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    pub values: Vec<f64>,
    pub dx: f64,
}

impl Field1D {
    pub fn new(values: Vec<f64>, dx: f64) -> Self {
        assert!(dx > 0.0, "grid spacing must be positive");
        Field1D { values, dx }
    }

    pub fn zeros(n: usize, dx: f64) -> Self {
        Field1D::new(vec![0.0; n], dx)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Sampled real-valued function on a 2-D grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    values: Vec<f64>,
    h: usize,
    w: usize,
    pub dx: f64,
}

impl Field2D {
    pub fn new(values: Vec<f64>, h: usize, w: usize) -> Self {
        assert!(h >= 1 && w >= 1, "fields must have at least one sample");
        assert_eq!(values.len(), h * w);
        Field2D {
            values,
            h,
            w,
            dx: 1.0,
        }
    }

    pub fn zeros(h: usize, w: usize) -> Self {
        Field2D::new(vec![0.0; h * w], h, w)
    }

    pub fn constant(h: usize, w: usize, c: f64) -> Self {
        Field2D::new(vec![c; h * w], h, w)
    }

    /// Checkerboard of +1/-1 starting with +1 at the origin.
    pub fn checkerboard(h: usize, w: usize) -> Self {
        let mut values = Vec::with_capacity(h * w);
        for i in 0..h {
            for j in 0..w {
                values.push(if (i + j) % 2 == 0 { 1.0 } else { -1.0 });
            }
        }
        Field2D::new(values, h, w)
    }

    /// Per-entry standard normal field with a fixed seed.
    pub fn randn(h: usize, w: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..h * w)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Field2D::new(values, h, w)
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.w + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.values[i * self.w + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Plain grid sum of all entries (dx = 1 pixel units).
    pub fn sum(&self, p: super::Precision) -> f64 {
        super::det_sum(&self.values, p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Zero-pad into the corner of an `h x w` grid.
    pub fn padded_to(&self, h: usize, w: usize) -> Field2D {
        assert!(h >= self.h && w >= self.w);
        let mut out = Field2D::zeros(h, w);
        for i in 0..self.h {
            for j in 0..self.w {
                *out.at_mut(i, j) = self.at(i, j);
            }
        }
        out
    }

    /// The `kh x kw` corner block.
    pub fn corner(&self, kh: usize, kw: usize) -> Field2D {
        assert!(kh <= self.h && kw <= self.w);
        let mut out = Field2D::zeros(kh, kw);
        for i in 0..kh {
            for j in 0..kw {
                *out.at_mut(i, j) = self.at(i, j);
            }
        }
        out
    }

    /// Zero all entries outside the `kh x kw` corner window.
    pub fn apply_window(&mut self, kh: usize, kw: usize) {
        for i in 0..self.h {
            for j in 0..self.w {
                if i >= kh || j >= kw {
                    self.values[i * self.w + j] = 0.0;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Precision;

    #[test]
    fn checkerboard_alternates_and_sums_to_zero() {
        let f = Field2D::checkerboard(256, 256);
        assert_eq!(f.at(0, 0), 1.0);
        assert_eq!(f.at(0, 1), -1.0);
        assert_eq!(f.at(1, 0), -1.0);
        assert_eq!(f.sum(Precision::Double), 0.0);
    }

    #[test]
    fn randn_is_seed_deterministic() {
        let a = Field2D::randn(32, 32, 7);
        let b = Field2D::randn(32, 32, 7);
        assert_eq!(a, b);
        assert_ne!(a, Field2D::randn(32, 32, 8));
    }

    #[test]
    fn pad_and_window_round_trip() {
        let k = Field2D::randn(3, 3, 1);
        let p = k.padded_to(8, 8);
        assert_eq!(p.corner(3, 3), k);
        let mut q = p.clone();
        q.apply_window(3, 3);
        assert_eq!(q, p);
    }
}

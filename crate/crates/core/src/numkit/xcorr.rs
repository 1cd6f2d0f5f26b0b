use super::field::Field2D;
use super::precision::Precision;
use crate::{Error, Result};

/// Rule for image samples addressed outside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    ZeroPad,
}

/// Cross-correlation `(K * I)(x) = sum_z K(z) I(x + z)`.
///
/// The kernel is indexed by offsets from the output position; the output has
/// the size of the image. Out-of-range image indices follow `boundary`.
pub fn xcorr2(k: &Field2D, i: &Field2D, boundary: Boundary, p: Precision) -> Result<Field2D> {
    let (kh, kw) = k.shape();
    let (ih, iw) = i.shape();
    if kh > ih || kw > iw {
        return Err(Error::KernelLargerThanImage { kh, kw, ih, iw });
    }
    let mut out = Field2D::zeros(ih, iw);
    match (boundary, p) {
        (Boundary::Periodic, Precision::Double) => {
            for y in 0..ih {
                for x in 0..iw {
                    let mut acc = 0.0f64;
                    for dy in 0..kh {
                        let iy = (y + dy) % ih;
                        for dx in 0..kw {
                            let ix = (x + dx) % iw;
                            acc += k.at(dy, dx) * i.at(iy, ix);
                        }
                    }
                    *out.at_mut(y, x) = acc;
                }
            }
        }
        (Boundary::Periodic, Precision::Single) => {
            for y in 0..ih {
                for x in 0..iw {
                    let mut acc = 0.0f32;
                    for dy in 0..kh {
                        let iy = (y + dy) % ih;
                        for dx in 0..kw {
                            let ix = (x + dx) % iw;
                            acc += (k.at(dy, dx) as f32) * (i.at(iy, ix) as f32);
                        }
                    }
                    *out.at_mut(y, x) = acc as f64;
                }
            }
        }
        (Boundary::ZeroPad, _) => {
            for y in 0..ih {
                for x in 0..iw {
                    let mut acc = 0.0f64;
                    for dy in 0..kh {
                        let iy = y + dy;
                        if iy >= ih {
                            continue;
                        }
                        for dx in 0..kw {
                            let ix = x + dx;
                            if ix >= iw {
                                continue;
                            }
                            let term = k.at(dy, dx) * i.at(iy, ix);
                            acc = match p {
                                Precision::Double => acc + term,
                                Precision::Single => (acc as f32 + term as f32) as f64,
                            };
                        }
                    }
                    *out.at_mut(y, x) = p.round(acc);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_periodic(k: &Field2D, i: &Field2D) -> Field2D {
        let (kh, kw) = k.shape();
        let (ih, iw) = i.shape();
        let mut out = Field2D::zeros(ih, iw);
        for y in 0..ih {
            for x in 0..iw {
                let mut acc = 0.0;
                for dy in 0..kh {
                    for dx in 0..kw {
                        acc += k.at(dy, dx) * i.at((y + dy) % ih, (x + dx) % iw);
                    }
                }
                *out.at_mut(y, x) = acc;
            }
        }
        out
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut k = Field2D::zeros(3, 3);
        *k.at_mut(0, 0) = 1.0;
        let i = Field2D::randn(8, 8, 11);
        let o = xcorr2(&k, &i, Boundary::Periodic, Precision::Double).unwrap();
        assert_eq!(o, i);
    }

    #[test]
    fn scalar_kernel_scales_image() {
        let k = Field2D::constant(1, 1, 2.5);
        let i = Field2D::randn(6, 7, 5);
        let o = xcorr2(&k, &i, Boundary::Periodic, Precision::Double).unwrap();
        for (a, b) in o.values().iter().zip(i.values()) {
            assert!((a - 2.5 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_bruteforce_oracle() {
        let k = Field2D::randn(3, 3, 1);
        let i = Field2D::randn(8, 8, 2);
        let o = xcorr2(&k, &i, Boundary::Periodic, Precision::Double).unwrap();
        let n = naive_periodic(&k, &i);
        for (a, b) in o.values().iter().zip(n.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn oversized_kernel_is_an_error() {
        let k = Field2D::zeros(9, 9);
        let i = Field2D::zeros(8, 8);
        assert!(xcorr2(&k, &i, Boundary::Periodic, Precision::Double).is_err());
    }

    #[test]
    fn zero_pad_drops_out_of_range_taps() {
        let k = Field2D::constant(2, 2, 1.0);
        let i = Field2D::constant(4, 4, 1.0);
        let o = xcorr2(&k, &i, Boundary::ZeroPad, Precision::Double).unwrap();
        assert_eq!(o.at(0, 0), 4.0);
        assert_eq!(o.at(3, 3), 1.0);
        assert_eq!(o.at(3, 0), 2.0);
    }
}

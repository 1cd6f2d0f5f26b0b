//! Deterministic numeric substrate: grids, spectra, cross-correlation and
//! reductions with a fixed evaluation order in selectable precision.
//!
//! Everything here is a pure function of its inputs; running an operation
//! twice with the same inputs and [`Precision`] yields bit-identical output.

mod engine;
mod fft;
mod field;
mod precision;
mod xcorr;

pub use engine::{ConvImage, CorrEngine};
pub use fft::{dft2, idft2, Fft2, Spectrum2D};
pub use field::{Field1D, Field2D};
pub use precision::{det_sum, Precision};
pub use xcorr::{xcorr2, Boundary};

pub use rustfft::num_complex::Complex;

/// Complex double used throughout the spectral code.
pub type C64 = Complex<f64>;

//! Deterministic numerical laboratory for studying stability of gradient-descent
//! dynamics through the lens of discretized PDEs.
//!
//! The crate simulates the classic pedagogical PDEs (heat, Beltrami
//! reaction-diffusion), one-layer and multi-layer continuum CNN gradient flows,
//! and Nesterov momentum, computes analytic Von Neumann stability bounds for
//! their discretizations, and provides probes that locate divergence boundaries
//! empirically, amplify last-bit floating-point perturbations, and track
//! Edge-of-Stability sharpness.
//!
//! All reductions follow a fixed left-to-right evaluation order so that a run
//! with the same inputs and [`numkit::Precision`] is bit-reproducible.

pub mod classic_pde;
pub mod cnn1;
pub mod multilayer;
pub mod nesterov;
pub mod numkit;
pub mod probes;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel ({kh}x{kw}) larger than image ({ih}x{iw})")]
    KernelLargerThanImage {
        kh: usize,
        kw: usize,
        ih: usize,
        iw: usize,
    },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid bisection bracket: stable end {stable} classified unstable, or unstable end {unstable} classified stable")]
    InvalidBracket { stable: f64, unstable: f64 },
    #[error("power iteration did not converge after {iters} iterations (last estimate {last})")]
    NoConvergence { iters: usize, last: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Arithmetic precision for the deterministic evaluation paths.
///
/// `Single` rounds results to 32-bit format (24-bit significand), `Double`
/// keeps the native 64-bit format (53-bit significand). The significand width
/// is what the perturbation model keys on: a last-bit perturbation is a
/// relative change on the order of `2^-s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    /// Significand bit count, including the implicit leading bit.
    pub fn significand_bits(self) -> u32 {
        match self {
            Precision::Single => 24,
            Precision::Double => 53,
        }
    }

    /// Round a value to this precision's format.
    #[inline]
    pub fn round(self, x: f64) -> f64 {
        match self {
            Precision::Single => x as f32 as f64,
            Precision::Double => x,
        }
    }

    /// Round every entry of a slice in place.
    pub fn round_slice(self, xs: &mut [f64]) {
        if self == Precision::Single {
            for x in xs.iter_mut() {
                *x = *x as f32 as f64;
            }
        }
    }
}

/// Left-to-right sequential sum in precision `p`.
///
/// The accumulation order is part of the contract: identical inputs in
/// identical order give bit-identical results regardless of thread count,
/// because the reduction is never split.
pub fn det_sum(xs: &[f64], p: Precision) -> f64 {
    match p {
        Precision::Double => xs.iter().fold(0.0f64, |acc, &x| acc + x),
        Precision::Single => xs.iter().fold(0.0f32, |acc, &x| acc + x as f32) as f64,
    }
}

//! Swish activation `r(x) = x / (1 + exp(-beta x))` and its derivatives,
//! evaluated through branch-stable closed forms that never overflow.

/// `r(x) = x * sigmoid(beta x)`.
pub fn swish(x: f64, beta: f64) -> f64 {
    let bx = beta * x;
    if bx >= 0.0 {
        x / (1.0 + (-bx).exp())
    } else {
        let q = bx.exp();
        x * q / (1.0 + q)
    }
}

/// `r'(x) = (1 + (1 + beta x) exp(-beta x)) / (1 + exp(-beta x))^2`;
/// `r'(0) = 1/2`.
pub fn swish_prime(x: f64, beta: f64) -> f64 {
    let bx = beta * x;
    if bx >= 0.0 {
        let e = (-bx).exp();
        (1.0 + (1.0 + bx) * e) / ((1.0 + e) * (1.0 + e))
    } else {
        // multiply numerator and denominator by exp(2 beta x)
        let q = bx.exp();
        (q * q + (1.0 + bx) * q) / ((1.0 + q) * (1.0 + q))
    }
}

/// `r''(x) = beta exp(-beta x) (2 (1 + exp(-beta x)) - beta x (1 - exp(-beta x)))
/// / (1 + exp(-beta x))^3`; `r''(0) = beta / 2`.
pub fn swish_second(x: f64, beta: f64) -> f64 {
    let bx = beta * x;
    if bx >= 0.0 {
        let e = (-bx).exp();
        let d = 1.0 + e;
        beta * e * (2.0 * d - bx * (1.0 - e)) / (d * d * d)
    } else {
        // multiply numerator and denominator by exp(3 beta x)
        let q = bx.exp();
        let d = 1.0 + q;
        beta * (2.0 * (q * q + q) + bx * (q - q * q)) / (d * d * d)
    }
}

/// Logistic sigmoid, overflow-safe on both tails.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let q = x.exp();
        q / (1.0 + q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        for beta in [0.5, 1.0, 2.0, 7.0] {
            assert_eq!(swish(0.0, beta), 0.0);
            assert!((swish_prime(0.0, beta) - 0.5).abs() < 1e-15);
            assert!((swish_second(0.0, beta) - beta / 2.0).abs() < 1e-15);
        }
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn saturation_without_overflow() {
        // far positive: identity; far negative: zero. No NaN/inf anywhere.
        for &x in &[1e3, 1e6, 1e300] {
            assert!((swish(x, 1.0) - x).abs() < 1e-9 * x);
            assert!((swish_prime(x, 1.0) - 1.0).abs() < 1e-12);
            assert!(swish_second(x, 1.0).abs() < 1e-12);
            assert_eq!(swish(-x, 1.0), 0.0);
            assert_eq!(swish_prime(-x, 1.0), 0.0);
            assert_eq!(swish_second(-x, 1.0), 0.0);
            assert!(sigmoid(x).is_finite() && sigmoid(-x).is_finite());
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let eps = 1e-6;
        for beta in [0.7, 1.0, 3.0] {
            for x in [-2.5, -0.3, 0.0, 0.4, 1.9] {
                let fd1 = (swish(x + eps, beta) - swish(x - eps, beta)) / (2.0 * eps);
                assert!((fd1 - swish_prime(x, beta)).abs() < 1e-7, "r' at {x}");
                let fd2 = (swish_prime(x + eps, beta) - swish_prime(x - eps, beta)) / (2.0 * eps);
                assert!((fd2 - swish_second(x, beta)).abs() < 1e-6, "r'' at {x}");
            }
        }
    }

    #[test]
    fn branches_agree_at_the_seam() {
        // evaluate both formulas near zero from either side: continuity
        let l = swish_prime(-1e-12, 1.0);
        let r = swish_prime(1e-12, 1.0);
        assert!((l - r).abs() < 1e-12);
        let l2 = swish_second(-1e-12, 1.0);
        let r2 = swish_second(1e-12, 1.0);
        assert!((l2 - r2).abs() < 1e-10);
    }
}

use crate::probes::Classification;
use crate::{Error, Result};

/// Bisect the stability boundary of a scalar parameter.
///
/// `stable` and `unstable` are parameter values on the two sides of the
/// boundary (either order on the number line); both are verified before the
/// search starts. The probe returns true when a trial behaves unstably.
/// The returned estimate has relative width at most `rel_tol`.
pub fn bisect_boundary<F>(
    stable: f64,
    unstable: f64,
    rel_tol: f64,
    mut is_unstable: F,
) -> Result<f64>
where
    F: FnMut(f64) -> bool,
{
    if is_unstable(stable) || !is_unstable(unstable) {
        return Err(Error::InvalidBracket { stable, unstable });
    }
    let mut s = stable;
    let mut u = unstable;
    while (u - s).abs() > rel_tol * s.abs().max(u.abs()) {
        // geometric midpoint when the bracket spans a wide positive range
        let mid = if s > 0.0 && u > 0.0 && (u / s).max(s / u) > 4.0 {
            (s * u).sqrt()
        } else {
            0.5 * (s + u)
        };
        if mid == s || mid == u {
            break;
        }
        if is_unstable(mid) {
            u = mid;
        } else {
            s = mid;
        }
    }
    Ok(0.5 * (s + u))
}

/// [`bisect_boundary`] with a trial counted unstable exactly when the
/// classifier says `Unstable` within the trial's step budget.
pub fn empirical_bound_scan<F>(stable: f64, unstable: f64, rel_tol: f64, mut run: F) -> Result<f64>
where
    F: FnMut(f64) -> Classification,
{
    bisect_boundary(stable, unstable, rel_tol, |p| {
        run(p) == Classification::Unstable
    })
}

/// Classify a linear(ized) flow by the growth of its state norm.
///
/// `advance` performs one step and returns the current sup norm. The probe
/// exits early once the norm leaves `[1e-9, 1e9] * init_norm`; otherwise the
/// late-window norm maximum is compared against the mid-run maximum, which
/// resolves slowly growing or decaying modes near the boundary without running
/// to machine limits.
pub fn growth_probe<F>(init_norm: f64, budget: usize, mut advance: F) -> Classification
where
    F: FnMut() -> f64,
{
    assert!(budget >= 8, "growth probe needs a few steps to compare");
    let init = init_norm.max(f64::MIN_POSITIVE);
    let mut norms = Vec::with_capacity(budget);
    for _ in 0..budget {
        let n = advance();
        if !n.is_finite() || n > 1e9 * init {
            return Classification::Unstable;
        }
        if n < 1e-9 * init {
            return Classification::Stable;
        }
        norms.push(n);
    }
    // compare windowed maxima around the midpoint and at the end; oscillating
    // modes flip sign step to step, so single samples would be unreliable
    let span = (budget / 10).max(2);
    let mid = budget / 2;
    let wmax = |s: &[f64]| s.iter().copied().fold(0.0f64, f64::max);
    let m_mid = wmax(&norms[mid - span..mid]);
    let m_end = wmax(&norms[budget - span..]);
    if m_end > m_mid {
        Classification::Unstable
    } else {
        Classification::Stable
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_probe_detects_slow_growth_and_decay() {
        for (rate, expect) in [
            (1.0005, Classification::Unstable),
            (0.9995, Classification::Stable),
            (1.2, Classification::Unstable),
            (0.5, Classification::Stable),
        ] {
            let mut x: f64 = 1.0;
            let got = growth_probe(1.0, 2000, || {
                x *= rate;
                x.abs()
            });
            assert_eq!(got, expect, "rate {rate}");
        }
    }

    #[test]
    fn growth_probe_handles_oscillating_modes() {
        // amplifier -1.0002: sign flips every step, magnitude slowly grows
        let mut x: f64 = 1.0;
        let grow = growth_probe(1.0, 2000, || {
            x *= -1.0002;
            x.abs()
        });
        assert_eq!(grow, Classification::Unstable);
        let mut y: f64 = 1.0;
        let shrink = growth_probe(1.0, 2000, || {
            y *= -0.9998;
            y.abs()
        });
        assert_eq!(shrink, Classification::Stable);
    }

    #[test]
    fn finds_a_known_threshold() {
        let b = bisect_boundary(0.0, 10.0, 1e-3, |x| x > 3.7).unwrap();
        assert!((b - 3.7).abs() < 10.0 * 1e-3);
    }

    #[test]
    fn works_with_descending_brackets() {
        // stable above the boundary, unstable below
        let b = bisect_boundary(1e8, 1e6, 1e-2, |x| x < 1.3e7).unwrap();
        assert!((b - 1.3e7).abs() / 1.3e7 < 2e-2);
    }

    #[test]
    fn invalid_bracket_is_an_error() {
        assert!(bisect_boundary(5.0, 10.0, 1e-2, |x| x > 3.0).is_err());
        assert!(bisect_boundary(0.0, 2.0, 1e-2, |x| x > 3.0).is_err());
    }
}

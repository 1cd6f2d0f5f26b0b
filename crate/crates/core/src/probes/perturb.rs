use crate::numkit::{Field2D, Precision};
use crate::probes::TrajectoryRecord;
use crate::{Error, Result};

/// Parameters of the perturbed update `theta - (eta/k) * (k g)`.
///
/// `k = 1` is the plain update; odd `k > 1` perturbs the last significand bit
/// of the update term; powers of two only shift exponents and leave the
/// update bit-identical.
#[derive(Debug, Clone, Copy)]
pub struct PerturbConfig {
    pub k: u32,
    pub precision: Precision,
}

impl PerturbConfig {
    pub fn new(k: u32, precision: Precision) -> Self {
        assert!(k >= 1);
        PerturbConfig { k, precision }
    }
}

/// One perturbed gradient update. The operation order is the contract:
/// round `eta/k`, round each `k*g_i`, round the product, round the
/// subtraction, all in `pc.precision`.
pub fn perturbed_update(theta: &Field2D, g: &Field2D, eta: f64, pc: &PerturbConfig) -> Field2D {
    assert_eq!(theta.shape(), g.shape());
    let p = pc.precision;
    let k = pc.k as f64;
    let eta_k = p.round(eta / k);
    let values = theta
        .values()
        .iter()
        .zip(g.values())
        .map(|(&t, &gi)| {
            let kg = p.round(k * gi);
            let step = p.round(eta_k * kg);
            p.round(t - step)
        })
        .collect();
    let (h, w) = theta.shape();
    Field2D::new(values, h, w)
}

/// Average relative L1 difference `(2/N) sum |a_i - b_i| / (|a_i| + |b_i|)`,
/// bounded by 2; components with zero denominator contribute 0.
pub fn rel_l1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let denom = x.abs() + y.abs();
        if denom > 0.0 {
            acc += (x - y).abs() / denom;
        }
    }
    Ok(2.0 * acc / a.len() as f64)
}

/// Result of a lockstep baseline/perturbed pair of trajectories.
#[derive(Debug, Clone)]
pub struct TwinRun {
    pub baseline: TrajectoryRecord,
    pub perturbed: TrajectoryRecord,
    /// RelL1 between the two weight states, one entry per iteration.
    pub rel_l1: Vec<f64>,
    pub diverged: bool,
}

/// Run baseline (`k = 1`) and perturbed (`k = pc.k`) trajectories in lockstep
/// from the same initial state, recording the RelL1 divergence per iteration.
///
/// The two trajectories are interleaved in a single thread so both see the
/// exact same evaluation order.
pub fn twin_run<G, L>(
    theta0: &Field2D,
    eta: f64,
    steps: usize,
    pc: &PerturbConfig,
    mut grad: G,
    mut loss: L,
) -> TwinRun
where
    G: FnMut(&Field2D) -> Field2D,
    L: FnMut(&Field2D) -> f64,
{
    let base_pc = PerturbConfig::new(1, pc.precision);
    let mut a = theta0.clone();
    let mut b = theta0.clone();
    let init_norm = theta0.sup_norm().max(f64::MIN_POSITIVE);
    let mut out = TwinRun {
        baseline: TrajectoryRecord::new(),
        perturbed: TrajectoryRecord::new(),
        rel_l1: Vec::with_capacity(steps),
        diverged: false,
    };
    for _ in 0..steps {
        let ga = grad(&a);
        let gb = grad(&b);
        a = perturbed_update(&a, &ga, eta, &base_pc);
        b = perturbed_update(&b, &gb, eta, pc);
        let d = rel_l1(a.values(), b.values()).expect("equal shapes");
        out.baseline.push(loss(&a), ga.sup_norm(), a.sup_norm());
        out.perturbed
            .push_full(loss(&b), gb.sup_norm(), b.sup_norm(), None, Some(d));
        out.rel_l1.push(d);
        let bad = |f: &Field2D| !f.all_finite() || f.sup_norm() > 1e9 * init_norm;
        if bad(&a) || bad(&b) {
            out.diverged = true;
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_matches_plain_update() {
        let t = Field2D::randn(4, 4, 1);
        let g = Field2D::randn(4, 4, 2);
        let pc = PerturbConfig::new(1, Precision::Double);
        let u = perturbed_update(&t, &g, 0.01, &pc);
        for ((&a, &ti), &gi) in u.values().iter().zip(t.values()).zip(g.values()) {
            assert_eq!(a.to_bits(), (ti - 0.01 * gi).to_bits());
        }
    }

    #[test]
    fn power_of_two_k_is_bit_identical() {
        let t = Field2D::randn(8, 8, 3);
        let g = Field2D::randn(8, 8, 4);
        for p in [Precision::Single, Precision::Double] {
            let base = perturbed_update(&t, &g, 0.07, &PerturbConfig::new(1, p));
            for k in [2u32, 4, 8, 64, 1024] {
                let u = perturbed_update(&t, &g, 0.07, &PerturbConfig::new(k, p));
                for (&a, &b) in base.values().iter().zip(u.values()) {
                    assert_eq!(a.to_bits(), b.to_bits(), "k={k}");
                }
            }
        }
    }

    #[test]
    fn odd_k_perturbs_last_bit_in_single() {
        let t = Field2D::zeros(16, 16);
        let g = Field2D::randn(16, 16, 5);
        let eta = 0.03;
        let p1 = perturbed_update(&t, &g, eta, &PerturbConfig::new(1, Precision::Single));
        let p3 = perturbed_update(&t, &g, eta, &PerturbConfig::new(3, Precision::Single));
        let mut any_diff = false;
        for (&a, &b) in p1.values().iter().zip(p3.values()) {
            if a != b {
                any_diff = true;
            }
            if a != 0.0 {
                // update terms agree to a relative error below 2^-23
                assert!(((a - b) / a).abs() < 2.0f64.powi(-23) * 2.0);
            }
        }
        assert!(any_diff, "k=3 should perturb at least one component");
    }

    #[test]
    fn rel_l1_values() {
        assert_eq!(rel_l1(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        // opposite signs saturate the bound of 2
        assert_eq!(rel_l1(&[1.0, -3.0], &[-1.0, 3.0]).unwrap(), 2.0);
        // hand evaluation: (2/2) * (0 + 1/3)
        let v = rel_l1(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        // zero denominators contribute 0
        assert_eq!(rel_l1(&[0.0], &[0.0]).unwrap(), 0.0);
        assert!(rel_l1(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn twin_with_k1_never_separates() {
        let t0 = Field2D::randn(4, 4, 9);
        let pc = PerturbConfig::new(1, Precision::Single);
        let run = twin_run(&t0, 0.1, 50, &pc, |t| t.clone(), |t| t.sup_norm());
        assert!(run.rel_l1.iter().all(|&d| d == 0.0));
    }
}

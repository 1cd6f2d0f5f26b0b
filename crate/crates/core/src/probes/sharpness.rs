use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numkit::Field2D;

#[derive(Debug, Clone, Copy)]
pub struct SharpnessResult {
    /// Magnitude-dominant Hessian eigenvalue, sign from the Rayleigh quotient.
    pub lambda_max: f64,
    pub converged: bool,
    pub iters: usize,
}

/// Largest-magnitude Hessian eigenvalue by power iteration on Hessian-vector
/// products, with `Hv ~ (grad(theta + eps v) - grad(theta - eps v)) / (2 eps)`
/// and `eps = hvp_eps * (1 + sup|theta|)`.
///
/// Converged when successive Rayleigh quotients differ by less than `1e-6`
/// relative; on iteration exhaustion the last estimate is reported with
/// `converged = false`.
pub fn sharpness<G>(mut grad: G, theta: &Field2D, hvp_eps: f64, max_iters: usize) -> SharpnessResult
where
    G: FnMut(&Field2D) -> Field2D,
{
    let (h, w) = theta.shape();
    let eps = hvp_eps * (1.0 + theta.sup_norm());
    sharpness_op(
        |v| hvp(&mut grad, theta, v, eps, h, w),
        h * w,
        max_iters,
    )
}

/// Power iteration on an arbitrary (symmetric) operator given as a
/// matrix-vector product. Convergence criterion as in [`sharpness`].
pub fn sharpness_op<H>(mut apply: H, n: usize, max_iters: usize) -> SharpnessResult
where
    H: FnMut(&[f64]) -> Vec<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ea5_0001);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut v);

    let mut rq_prev = f64::NAN;
    let mut rq = 0.0;
    for it in 0..max_iters {
        let hv = apply(&v);
        rq = dot(&v, &hv);
        let norm = dot(&hv, &hv).sqrt();
        if norm == 0.0 {
            // zero Hessian (linear loss)
            return SharpnessResult {
                lambda_max: 0.0,
                converged: true,
                iters: it + 1,
            };
        }
        v = hv;
        for x in v.iter_mut() {
            *x /= norm;
        }
        if rq_prev.is_finite() && (rq - rq_prev).abs() <= 1e-6 * rq.abs().max(1e-300) {
            return SharpnessResult {
                lambda_max: rq,
                converged: true,
                iters: it + 1,
            };
        }
        rq_prev = rq;
    }
    SharpnessResult {
        lambda_max: rq,
        converged: false,
        iters: max_iters,
    }
}

fn hvp<G>(grad: &mut G, theta: &Field2D, v: &[f64], eps: f64, h: usize, w: usize) -> Vec<f64>
where
    G: FnMut(&Field2D) -> Field2D,
{
    let plus = Field2D::new(
        theta
            .values()
            .iter()
            .zip(v)
            .map(|(&t, &vi)| t + eps * vi)
            .collect(),
        h,
        w,
    );
    let minus = Field2D::new(
        theta
            .values()
            .iter()
            .zip(v)
            .map(|(&t, &vi)| t - eps * vi)
            .collect(),
        h,
        w,
    );
    let gp = grad(&plus);
    let gm = grad(&minus);
    gp.values()
        .iter()
        .zip(gm.values())
        .map(|(&a, &b)| (a - b) / (2.0 * eps))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

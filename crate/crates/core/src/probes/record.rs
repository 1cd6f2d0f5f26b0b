/// Per-iteration time series of a single optimization/PDE trajectory.
///
/// All series have equal length; the optional columns hold `None` where the
/// observable was not sampled.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryRecord {
    pub loss: Vec<f64>,
    pub grad_inf: Vec<f64>,
    pub state_inf: Vec<f64>,
    pub sharpness: Vec<Option<f64>>,
    pub rel_l1: Vec<Option<f64>>,
}

impl TrajectoryRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loss.is_empty()
    }

    pub fn push(&mut self, loss: f64, grad_inf: f64, state_inf: f64) {
        self.push_full(loss, grad_inf, state_inf, None, None);
    }

    pub fn push_full(
        &mut self,
        loss: f64,
        grad_inf: f64,
        state_inf: f64,
        sharpness: Option<f64>,
        rel_l1: Option<f64>,
    ) {
        self.loss.push(loss);
        self.grad_inf.push(grad_inf);
        self.state_inf.push(state_inf);
        self.sharpness.push(sharpness);
        self.rel_l1.push(rel_l1);
    }

    /// Build a record from a bare loss series (PDE runs that track one scalar).
    pub fn from_series(series: &[f64], state_inf: &[f64]) -> Self {
        assert_eq!(series.len(), state_inf.len());
        let n = series.len();
        TrajectoryRecord {
            loss: series.to_vec(),
            grad_inf: vec![f64::NAN; n],
            state_inf: state_inf.to_vec(),
            sharpness: vec![None; n],
            rel_l1: vec![None; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Stable,
    Restrained,
    Unstable,
    /// Too few iterations to decide.
    Indeterminate,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Stable => "stable",
            Classification::Restrained => "restrained",
            Classification::Unstable => "unstable",
            Classification::Indeterminate => "indeterminate",
        };
        f.write_str(s)
    }
}

/// Tunables of the trajectory classifier. Acceptance-grade conclusions are
/// insensitive to factor-2 changes in the oscillation-detector knobs.
#[derive(Debug, Clone)]
pub struct ClassifyParams {
    /// Fraction of the trajectory tail inspected for convergence/oscillation.
    pub window_frac: f64,
    /// Loss peak-to-trough range below `rel * initial loss` counts as settled.
    pub stable_range_rel: f64,
    /// State blow-up factor relative to the initial state norm.
    pub divergence_factor: f64,
    /// Restrained requires the tail loss to stay below `factor * median loss`.
    pub bound_median_factor: f64,
    /// Minimum number of full oscillation cycles in the tail.
    pub min_peaks: usize,
    /// Oscillation prominence threshold relative to the median loss.
    pub prominence_rel: f64,
    /// Minimum record length for a decision.
    pub min_len: usize,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            window_frac: 0.25,
            stable_range_rel: 1e-6,
            divergence_factor: 1e9,
            bound_median_factor: 10.0,
            min_peaks: 3,
            prominence_rel: 1e-4,
            min_len: 16,
        }
    }
}

impl ClassifyParams {
    /// Variant for flows whose restrained oscillations legitimately spike
    /// orders of magnitude above the median loss (saturating classifier
    /// heads): boundedness is judged by the state blow-up check alone, the
    /// loss-vs-median bound is disabled, and residual limit cycles far below
    /// the initial loss scale still count as settled.
    pub fn spike_tolerant() -> Self {
        ClassifyParams {
            bound_median_factor: f64::INFINITY,
            stable_range_rel: 4e-3,
            ..Self::default()
        }
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

/// Count full oscillation cycles: a rise of at least `prom` above the last
/// trough followed by a fall of at least `prom` below the peak.
fn count_cycles(xs: &[f64], prom: f64) -> usize {
    if xs.is_empty() {
        return 0;
    }
    let mut count = 0;
    let mut trough = xs[0];
    let mut peak = f64::NEG_INFINITY;
    let mut armed = false;
    for &x in xs {
        if !armed {
            if x < trough {
                trough = x;
            }
            if x - trough >= prom {
                armed = true;
                peak = x;
            }
        } else {
            if x > peak {
                peak = x;
            }
            if peak - x >= prom {
                count += 1;
                armed = false;
                trough = x;
            }
        }
    }
    count
}

/// Three-way classification of a completed (or diverged) run.
///
/// Unstable: non-finite values or state norm beyond `divergence_factor` times
/// its initial value. Stable: the tail of the loss has settled, or is bounded
/// without recurrent oscillation. Restrained: bounded loss with persistent
/// oscillation in the tail.
pub fn classify_trajectory(rec: &TrajectoryRecord, params: &ClassifyParams) -> Classification {
    let n = rec.len();
    if n < params.min_len {
        return Classification::Indeterminate;
    }
    let state0 = rec.state_inf[0].abs().max(f64::MIN_POSITIVE);
    let blown = rec
        .loss
        .iter()
        .zip(&rec.state_inf)
        .any(|(&l, &s)| !l.is_finite() || !s.is_finite() || s > params.divergence_factor * state0);
    if blown {
        return Classification::Unstable;
    }

    let wlen = ((n as f64 * params.window_frac).ceil() as usize).clamp(4, n);
    let tail = &rec.loss[n - wlen..];
    let t_max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t_min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let init_scale = rec.loss[0].abs().max(f64::MIN_POSITIVE);
    if t_max - t_min < params.stable_range_rel * init_scale {
        return Classification::Stable;
    }

    let med = median(&rec.loss).abs().max(f64::MIN_POSITIVE);
    let bounded = t_max < params.bound_median_factor * med;
    let cycles = count_cycles(tail, params.prominence_rel * med);
    if bounded && cycles >= params.min_peaks {
        return Classification::Restrained;
    }
    if bounded {
        Classification::Stable
    } else {
        Classification::Unstable
    }
}

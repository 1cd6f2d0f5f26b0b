//! Experiment configuration: one TOML file with per-subcommand sections,
//! dotted-path `--set` overrides, and full-resolution echo into metadata.
//!
//! Unknown keys are rejected; every value (given or defaulted) is serialized
//! back out so a result directory always records the exact configuration it
//! was produced from.

use std::path::Path;

use anyhow::{bail, Context, Result};
use restrain_core::numkit::Precision;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionOpt {
    Double,
    Single,
}

impl From<PrecisionOpt> for Precision {
    fn from(p: PrecisionOpt) -> Precision {
        match p {
            PrecisionOpt::Double => Precision::Double,
            PrecisionOpt::Single => Precision::Single,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub precision: PrecisionOpt,
    pub heat: HeatSection,
    pub beltrami: BeltramiSection,
    pub linear_bounds: LinearBoundsSection,
    pub nonlinear: NonlinearSection,
    pub perturb: PerturbSection,
    pub nesterov_bounds: NesterovBoundsSection,
    pub eos: EosSection,
    pub layers: LayersSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            precision: PrecisionOpt::Double,
            heat: HeatSection::default(),
            beltrami: BeltramiSection::default(),
            linear_bounds: LinearBoundsSection::default(),
            nonlinear: NonlinearSection::default(),
            perturb: PerturbSection::default(),
            nesterov_bounds: NesterovBoundsSection::default(),
            eos: EosSection::default(),
            layers: LayersSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatSection {
    /// Grid ratio `kappa*dt/dx^2`; 0.5 is the CFL threshold.
    pub ratios: Vec<f64>,
    pub steps: usize,
}

impl Default for HeatSection {
    fn default() -> Self {
        HeatSection {
            ratios: vec![0.4, 0.8],
            steps: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeltramiSection {
    pub delta: f64,
    pub lambda: f64,
    /// Multiples of the strict CFL step to run at.
    pub overdrive: Vec<f64>,
    pub steps: usize,
}

impl Default for BeltramiSection {
    fn default() -> Self {
        BeltramiSection {
            delta: 0.01,
            lambda: 1.0,
            overdrive: vec![1.0, 10.0, 100.0, 1000.0],
            steps: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearBoundsSection {
    /// Checkerboard side for the analytic bounds.
    pub side: usize,
    pub dt: f64,
    pub a: f64,
    pub beta: f64,
    /// Kernel (window) sides to scan empirically.
    pub kernels: Vec<usize>,
    /// Step budget per probe of the upper (alpha_max) scan.
    pub budget_max: usize,
    /// Step budget per probe of the lower (alpha_min) scan.
    pub budget_min: usize,
    pub rel_tol: f64,
}

impl Default for LinearBoundsSection {
    fn default() -> Self {
        LinearBoundsSection {
            side: 256,
            dt: 1e-8,
            a: -0.5,
            beta: 1.0,
            kernels: vec![16, 32, 64],
            budget_max: 400,
            budget_min: 2000,
            rel_tol: 0.02,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearSection {
    pub side: usize,
    pub window: usize,
    pub alpha: f64,
    pub beta: f64,
    pub dts: Vec<f64>,
    pub steps: usize,
    /// Step budget per probe of the boundary scans.
    pub scan_steps: usize,
    pub scan_rel_tol: f64,
}

impl Default for NonlinearSection {
    fn default() -> Self {
        NonlinearSection {
            side: 256,
            window: 16,
            alpha: 20.0,
            beta: 1.0,
            dts: vec![0.01, 0.05, 0.07, 0.09, 0.2],
            steps: 600,
            scan_steps: 400,
            scan_rel_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbSection {
    pub side: usize,
    pub window: usize,
    pub alpha: f64,
    pub beta: f64,
    pub dt_stable: f64,
    pub dt_restrained: f64,
    pub ks: Vec<u32>,
    pub steps: usize,
}

impl Default for PerturbSection {
    fn default() -> Self {
        PerturbSection {
            side: 256,
            window: 16,
            alpha: 20.0,
            beta: 1.0,
            // well inside the stable zone even with single-precision rounding
            // noise; near the restrained onset, float32 jitter alone can keep
            // twin runs decorrelated
            dt_stable: 5e-4,
            dt_restrained: 0.07,
            ks: vec![2, 3, 4],
            steps: 1500,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NesterovBoundsSection {
    /// Checkerboard side of the empirical scan grid.
    pub side: usize,
    pub window: usize,
    pub dt: f64,
    pub a: f64,
    pub beta: f64,
    pub mus: Vec<f64>,
    pub budget: usize,
    /// Step budget for the lower boundary, where growth just past the
    /// threshold is slow (rate ~ (1+mu)/(1-mu) per unit excess).
    pub budget_slow: usize,
    pub rel_tol: f64,
}

impl Default for NesterovBoundsSection {
    fn default() -> Self {
        NesterovBoundsSection {
            side: 64,
            window: 16,
            dt: 1e-4,
            a: -0.5,
            beta: 1.0,
            mus: vec![0.5, 0.9],
            budget: 1500,
            budget_slow: 60000,
            rel_tol: 0.02,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EosSection {
    pub side: usize,
    pub window: usize,
    pub alpha: f64,
    pub beta: f64,
    pub dts: Vec<f64>,
    pub steps: usize,
    pub sharpness_every: usize,
    pub sharpness_iters: usize,
}

impl Default for EosSection {
    fn default() -> Self {
        EosSection {
            side: 256,
            window: 16,
            alpha: 20.0,
            beta: 1.0,
            dts: vec![0.002, 0.01, 0.03, 0.05, 0.07, 0.09],
            steps: 600,
            sharpness_every: 1,
            sharpness_iters: 60,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayersSection {
    pub dataset: DatasetSection,
    /// Kernel side shared by every layer.
    pub kernel: usize,
    pub beta: f64,
    /// Weight-decay values to sweep; depth boundaries reported for each.
    pub alphas: Vec<f64>,
    pub depths: Vec<usize>,
    pub steps: usize,
    pub init_scale: f64,
    /// Learning-rate bracket for the stable-boundary bisection.
    pub lr_lo: f64,
    pub lr_hi: f64,
    pub rel_tol: f64,
}

impl Default for LayersSection {
    fn default() -> Self {
        LayersSection {
            dataset: DatasetSection::default(),
            kernel: 3,
            beta: 1.0,
            alphas: vec![0.0, 5e-4],
            depths: vec![1, 2, 3],
            steps: 300,
            init_scale: 2.5,
            lr_lo: 0.05,
            lr_hi: 30.0,
            rel_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// "checkerboard" | "stripes_vs_blobs" | "idx"
    pub kind: String,
    pub n: usize,
    pub size: usize,
    /// IDX paths, used only when kind = "idx".
    pub images: String,
    pub labels: String,
    pub filter_labels: Vec<u8>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            kind: "stripes_vs_blobs".to_string(),
            n: 16,
            size: 16,
            images: String::new(),
            labels: String::new(),
            filter_labels: vec![0, 1],
        }
    }
}

/// Load a config file and apply `key=value` overrides (dotted paths).
pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut table: toml::Table = text
        .parse()
        .with_context(|| format!("parsing config {}", path.display()))?;
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    let cfg: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .with_context(|| format!("validating config {}", path.display()))?;
    Ok(cfg)
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let Some((key, raw)) = spec.split_once('=') else {
        bail!("override `{spec}` is not of the form key=value");
    };
    let value = parse_value(raw.trim());
    let mut parts = key.trim().split('.').peekable();
    let mut cur = table;
    loop {
        let part = parts.next().context("empty override key")?;
        if parts.peek().is_none() {
            cur.insert(part.to_string(), value);
            return Ok(());
        }
        cur = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .with_context(|| format!("override `{key}`: `{part}` is not a section"))?;
    }
}

/// Interpret an override literal with TOML syntax; bare words fall back to
/// strings so `--set precision=single` needs no quoting.
fn parse_value(raw: &str) -> toml::Value {
    let probe = format!("v = {raw}");
    match probe.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Flatten the fully resolved config into sorted `key=value` metadata lines.
pub fn flatten(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let value = toml::Value::try_from(cfg).expect("config serializes");
    let mut out = Vec::new();
    walk("config", &value, &mut out);
    out.sort();
    out
}

fn walk(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, inner) in t {
                walk(&format!("{prefix}.{k}"), inner, out);
            }
        }
        toml::Value::Array(a) => {
            let items: Vec<String> = a.iter().map(render_scalar).collect();
            out.push((prefix.to_string(), items.join(",")));
        }
        other => out.push((prefix.to_string(), render_scalar(other))),
    }
}

fn render_scalar(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Float(f) => {
            let mut s = format!("{f}");
            if !s.contains(['.', 'e', 'n', 'i']) {
                s.push_str(".0");
            }
            s
        }
        other => other.to_string(),
    }
}

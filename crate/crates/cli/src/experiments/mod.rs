//! Experiment catalog: each submodule drives one subcommand, returns a
//! structured outcome for programmatic checks, and streams CSV/SVG artifacts
//! through an [`crate::output::OutputSink`].

pub mod beltrami;
pub mod eos;
pub mod heat;
pub mod layers;
pub mod linear_bounds;
pub mod nesterov_bounds;
pub mod nonlinear;
pub mod perturb;

/// Render a float for use inside artifact file names: `0.07` -> `0p07`.
pub(crate) fn fname_num(v: f64) -> String {
    format!("{v}").replace('.', "p").replace('-', "m")
}

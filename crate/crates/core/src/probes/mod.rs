//! Instrumentation: bit-level perturbed updates, twin-trajectory divergence,
//! empirical divergence-boundary scanning, sharpness via Hessian power
//! iteration, and the three-way trajectory classifier.

mod perturb;
mod record;
mod scan;
mod sharpness;

pub use perturb::{perturbed_update, rel_l1, twin_run, PerturbConfig, TwinRun};
pub use record::{classify_trajectory, Classification, ClassifyParams, TrajectoryRecord};
pub use scan::{bisect_boundary, empirical_bound_scan, growth_probe};
pub use sharpness::{sharpness, sharpness_op, SharpnessResult};

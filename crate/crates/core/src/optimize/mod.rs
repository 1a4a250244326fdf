//! Minimization of the discrete energy, thickness sweeps and their analysis.

mod align;
mod fit;
mod lbfgs;
mod line_search;
mod precond;
mod sweep;

pub use align::{procrustes, procrustes_align, w22_distance, Alignment, RigidMotion};
pub use fit::{fit_points, fit_scaling, linear_fit, ScalingFit};
pub use lbfgs::{minimize, Minimized, OptimizerConfig, Termination};
pub use sweep::{
    ansatz_field, ansatz_field_with, sweep, MeshConfig, SweepConfig, SweepRecord, SweepResult,
};

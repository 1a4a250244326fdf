//! Discrete free energy of a thin elastic sheet with a single disclination.
//!
//! The crate discretizes `I(y) = int |Dy^T Dy - g|^2 + h^2 |D^2 y|^2` on a
//! graded polar mesh of the punctured unit disk, minimizes it with L-BFGS,
//! and provides numerical checks of the curvature identities and
//! inequalities that govern its `h^2 log(1/h)` scaling.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod optimize;
pub mod snapshot;

pub use error::{Error, Result};
pub use geometry::{Metric2, Params};
pub use mesh::{DeformationField, JetField, PolarMesh};
pub use optimize::{MeshConfig, OptimizerConfig, SweepConfig, SweepRecord};

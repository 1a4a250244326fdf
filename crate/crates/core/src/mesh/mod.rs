//! Graded polar grid, nodal fields, finite-difference jets and quadrature.

pub(crate) mod field;
pub(crate) mod jets;
mod polar;
mod quadrature;
mod stencil;

pub use field::{sample_field, sample_with, DeformationField, Linear, ScalarField};
pub use jets::{compute_jets, scalar_jets, JetField, NodeJet, ScalarJet};
pub use polar::{build_mesh, log_uniform_radii, PolarMesh, INNER_RADIUS_FACTOR, MIN_RESOLUTION};
pub use quadrature::{integrate_region, integrate_ring};
pub(crate) use quadrature::{ring_from_sums, ring_sums, weighted_ring_sum};
pub use stencil::fornberg;

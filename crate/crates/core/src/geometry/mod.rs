//! Closed-form reference objects: the singular cone and its metric, the
//! mollified ansatz, generalized cones and the flat sector chart.

mod chart;
mod cone;
mod cutoff;
mod generalized;

pub use chart::{rotation, FlatChart};
pub use cone::{
    ansatz_map, cone_hessians, cone_jacobian, cone_map, reference_metric, Metric2, Params,
};
pub use cutoff::{Cutoff, FnCutoff, QuinticSmoothstep, RadialCutoff, SepticSmoothstep};
pub use generalized::{generalized_cone_map, GeneralizedCone, TrigCurve, CURVE_TOLERANCE};

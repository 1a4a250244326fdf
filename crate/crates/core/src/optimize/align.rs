use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cone_map, Params};
use crate::mesh::{compute_jets, sample_with, DeformationField, PolarMesh};

type V3 = Vector3<f64>;

/// `y -> rotation * y + translation` with `rotation` in O(3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    pub rotation: Matrix3<f64>,
    pub translation: V3,
}

impl RigidMotion {
    pub fn identity() -> Self {
        RigidMotion {
            rotation: Matrix3::identity(),
            translation: V3::zeros(),
        }
    }

    pub fn apply(&self, y: &V3) -> V3 {
        self.rotation * y + self.translation
    }

    pub fn apply_field(&self, field: &DeformationField) -> DeformationField {
        field.transformed(&self.rotation, &self.translation)
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        RigidMotion {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `|R^T R - I|` (Frobenius).
    pub fn orthogonality_defect(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).norm()
    }
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub motion: RigidMotion,
    pub aligned: DeformationField,
    /// Weighted L2 distance to the target on `rho <= |x| <= 1`.
    pub distance: f64,
}

/// Per-node quadrature weights of the annulus `rho <= |x| <= 1`.
fn region_node_weights(mesh: &PolarMesh, rho: f64) -> Result<Vec<f64>> {
    if !(rho > mesh.r_inner() && rho < 1.0) {
        return Err(Error::RadiusOutOfRange {
            r: rho,
            lo: mesh.r_inner(),
            hi: 1.0,
        });
    }
    let rings = mesh.region_ring_weights(rho, 1.0)?;
    Ok(rings
        .iter()
        .flat_map(|w| std::iter::repeat_n(*w, mesh.n_angular()))
        .collect())
}

/// Weighted O(3) Procrustes fit of `source` onto `target`.
pub fn procrustes(source: &[V3], target: &[V3], weights: &[f64]) -> Result<(RigidMotion, f64)> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateCovariance { rank: 0 });
    }
    let centroid = |v: &[V3]| v.iter().zip(weights).map(|(y, w)| y * *w).sum::<V3>() / total;
    let (cs, ct) = (centroid(source), centroid(target));
    let mut cov = Matrix3::zeros();
    for ((s, t), w) in source.iter().zip(target).zip(weights) {
        cov += (s - cs) * (t - ct).transpose() * *w;
    }
    let svd = cov.svd(true, true);
    let sv = svd.singular_values;
    let rank = sv
        .iter()
        .filter(|&&s| s > 1e-12 * sv.max().max(f64::MIN_POSITIVE))
        .count();
    if rank < 2 {
        return Err(Error::DegenerateCovariance { rank });
    }
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    // reflections allowed: R = V U^T
    let rotation = vt.transpose() * u.transpose();
    let motion = RigidMotion {
        rotation,
        translation: ct - rotation * cs,
    };
    let sq: f64 = source
        .iter()
        .zip(target)
        .zip(weights)
        .map(|((s, t), w)| w * (motion.apply(s) - t).norm_squared())
        .sum();
    Ok((motion, sq.max(0.0).sqrt()))
}

/// Aligns `field` onto the cone sampled on the same mesh, using nodes of
/// `rho <= |x| <= 1`.
pub fn procrustes_align(field: &DeformationField, params: &Params, rho: f64) -> Result<Alignment> {
    let mesh = field.mesh();
    let weights = region_node_weights(mesh, rho)?;
    let cone = sample_with(mesh.clone(), |x| cone_map(x, params.delta))?;
    let (motion, distance) = procrustes(field.values(), cone.values(), &weights)?;
    Ok(Alignment {
        motion,
        aligned: motion.apply_field(field),
        distance,
    })
}

/// `W^{2,2}` distance on `rho <= |x| <= 1`.
pub fn w22_distance(a: &DeformationField, b: &DeformationField, rho: f64) -> Result<f64> {
    a.ensure_same_mesh(b)?;
    let mesh = a.mesh();
    let weights = region_node_weights(mesh, rho)?;
    let diff: Vec<V3> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x - y)
        .collect();
    let diff = DeformationField::new(mesh.clone(), diff)?;
    let jets = compute_jets(&diff)?;
    let sq: f64 = diff
        .values()
        .iter()
        .zip(jets.nodes())
        .zip(&weights)
        .filter(|(_, w)| **w != 0.0)
        .map(|((v, j), w)| w * (v.norm_squared() + j.dy.norm_squared() + j.hessian_norm_sq()))
        .sum();
    Ok(sq.max(0.0).sqrt())
}

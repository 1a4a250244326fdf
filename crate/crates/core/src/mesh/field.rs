use std::ops::{Add, AddAssign, Mul, Sub};
use std::sync::Arc;

use nalgebra::{Matrix3, Vector2, Vector3};

use super::polar::PolarMesh;
use crate::error::{Error, Result};

/// Nodal values that finite-difference stencils can combine linearly.
pub trait Linear:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + AddAssign
{
    fn zero() -> Self;
}

impl Linear for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Linear for Vector3<f64> {
    fn zero() -> Self {
        Vector3::zeros()
    }
}

/// Nodal values of a map `y: annulus -> R^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    mesh: Arc<PolarMesh>,
    values: Vec<Vector3<f64>>,
}

impl DeformationField {
    pub fn new(mesh: Arc<PolarMesh>, values: Vec<Vector3<f64>>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::MeshMismatch(format!(
                "{} values for a mesh of {} nodes",
                values.len(),
                mesh.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite(format!("field value at node {k}")));
        }
        Ok(DeformationField { mesh, values })
    }

    pub fn mesh(&self) -> &Arc<PolarMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[Vector3<f64>] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> Vector3<f64> {
        self.values[self.mesh.index(i, j)]
    }

    pub fn into_values(self) -> Vec<Vector3<f64>> {
        self.values
    }

    /// `x -> rot * y(x) + shift`.
    pub fn transformed(&self, rot: &Matrix3<f64>, shift: &Vector3<f64>) -> Self {
        DeformationField {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| rot * v + shift).collect(),
        }
    }

    /// Cyclic shift of every ring by `k` angular positions.
    pub fn rotate_angular(&self, k: usize) -> Self {
        DeformationField {
            mesh: self.mesh.clone(),
            values: rotate_rings(&self.mesh, &self.values, k),
        }
    }

    /// Components flattened as `[y1, y2, y3]` per node.
    pub fn to_flat(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
    }

    pub fn from_flat(mesh: Arc<PolarMesh>, flat: &[f64]) -> Result<Self> {
        if flat.len() != 3 * mesh.len() {
            return Err(Error::MeshMismatch(format!(
                "{} scalars for a mesh of {} nodes",
                flat.len(),
                mesh.len()
            )));
        }
        let values = flat
            .chunks_exact(3)
            .map(|c| Vector3::new(c[0], c[1], c[2]))
            .collect();
        Self::new(mesh, values)
    }

    pub(crate) fn ensure_same_mesh(&self, other: &DeformationField) -> Result<()> {
        if Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh {
            Ok(())
        } else {
            Err(Error::MeshMismatch(
                "fields live on different meshes".into(),
            ))
        }
    }
}

/// Nodal values of a scalar function on the annulus.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    mesh: Arc<PolarMesh>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: Arc<PolarMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::MeshMismatch(format!(
                "{} values for a mesh of {} nodes",
                values.len(),
                mesh.len()
            )));
        }
        Ok(ScalarField { mesh, values })
    }

    pub fn sample(mesh: Arc<PolarMesh>, f: impl Fn(&Vector2<f64>) -> f64) -> Self {
        let values = mesh.points().map(|x| f(&x)).collect();
        ScalarField { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<PolarMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Evaluates `map` at every node; the first failure is returned.
pub fn sample_field<F>(map: F, mesh: Arc<PolarMesh>) -> Result<DeformationField>
where
    F: Fn(&Vector2<f64>) -> Result<Vector3<f64>>,
{
    let values = mesh.points().map(|x| map(&x)).collect::<Result<Vec<_>>>()?;
    DeformationField::new(mesh, values)
}

/// Infallible variant of [`sample_field`].
pub fn sample_with<F>(mesh: Arc<PolarMesh>, map: F) -> Result<DeformationField>
where
    F: Fn(&Vector2<f64>) -> Vector3<f64>,
{
    sample_field(|x| Ok(map(x)), mesh)
}

pub(crate) fn rotate_rings<T: Copy>(mesh: &PolarMesh, values: &[T], k: usize) -> Vec<T> {
    let nt = mesh.n_angular();
    let mut out = values.to_vec();
    for (src, dst) in values.chunks(nt).zip(out.chunks_mut(nt)) {
        for j in 0..nt {
            dst[(j + k) % nt] = src[j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cone_map, Params};
    use crate::mesh::build_mesh;

    fn mesh() -> Arc<PolarMesh> {
        Arc::new(build_mesh(&Params::new(0.5, 0.1).unwrap(), 16, 16).unwrap())
    }

    #[test]
    fn sampling_examples() {
        let m = mesh();
        let f = sample_with(m.clone(), |x| cone_map(x, 0.5)).unwrap();
        assert_eq!(f.value(3, 5), cone_map(&m.point(3, 5), 0.5));
        let c = Vector3::new(1.0, -2.0, 0.5);
        let f = sample_with(m.clone(), |_| c).unwrap();
        assert!(f.values().iter().all(|v| *v == c));
        let f = sample_with(m.clone(), |x| Vector3::new(x.x, x.y, 0.0)).unwrap();
        assert!(f.values().iter().all(|v| v.z == 0.0));
    }

    #[test]
    fn sampling_failure_propagates() {
        let err = sample_field(
            |x| crate::geometry::reference_metric(x, 2.0).and(Err(Error::NonFinite("boom".into()))),
            mesh(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let m = mesh();
        assert!(DeformationField::new(m.clone(), vec![Vector3::zeros(); 3]).is_err());
        let mut v = vec![Vector3::zeros(); m.len()];
        v[7].y = f64::NAN;
        assert!(DeformationField::new(m, v).is_err());
    }

    #[test]
    fn flat_round_trip_and_rotation() {
        let m = mesh();
        let f = sample_with(m.clone(), |x| Vector3::new(x.x, x.y * x.x, 1.0)).unwrap();
        let g = DeformationField::from_flat(m.clone(), &f.to_flat()).unwrap();
        assert_eq!(f, g);
        let r = f.rotate_angular(3);
        assert_eq!(r.value(2, 3), f.value(2, 0));
        assert_eq!(r.value(2, 1), f.value(2, 14));
    }
}

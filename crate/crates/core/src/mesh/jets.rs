use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3x2, Vector2};
use rayon::prelude::*;

use super::field::{DeformationField, Linear, ScalarField};
use super::polar::PolarMesh;
use crate::error::{Error, Result};
use crate::geometry::Metric2;

/// Derivatives in the polar frame `(x_hat, t)` at one node, where
/// `t = x_hat^perp`: `yr = dy/dr`, `yt = r^-1 dy/dtheta`, and the frame
/// components `hrr, hrt, htt` of the Cartesian Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FrameJet<T> {
    pub yr: T,
    pub yt: T,
    pub hrr: T,
    pub hrt: T,
    pub htt: T,
}

/// Raw stencil outputs at one node: `y_r, y_theta, y_rr, (y_theta)_r, y_thetatheta`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Primitive<T> {
    pub d_r: T,
    pub d_t: T,
    pub d_rr: T,
    pub d_rt: T,
    pub d_tt: T,
}

/// Angular first and second differences of every node.
fn angular_differences<T: Linear>(mesh: &PolarMesh, values: &[T]) -> (Vec<T>, Vec<T>) {
    let nt = mesh.n_angular();
    let (c1, c2) = mesh.angular();
    let mut d1 = vec![T::zero(); values.len()];
    let mut d2 = vec![T::zero(); values.len()];
    for ((ring, a), b) in values
        .chunks(nt)
        .zip(d1.chunks_mut(nt))
        .zip(d2.chunks_mut(nt))
    {
        for j in 0..nt {
            let next = ring[(j + 1) % nt];
            let prev = ring[(j + nt - 1) % nt];
            a[j] = (next - prev) * c1;
            b[j] = (next + prev - ring[j] * 2.0) * c2;
        }
    }
    (d1, d2)
}

pub(crate) fn primitives<T: Linear>(mesh: &PolarMesh, values: &[T]) -> Vec<Primitive<T>> {
    let nt = mesh.n_angular();
    let (d_t, d_tt) = angular_differences(mesh, values);
    let stencils = mesh.stencils();
    let mut out = vec![
        Primitive {
            d_r: T::zero(),
            d_t: T::zero(),
            d_rr: T::zero(),
            d_rt: T::zero(),
            d_tt: T::zero(),
        };
        values.len()
    ];
    out.par_chunks_mut(nt).enumerate().for_each(|(i, ring)| {
        let s = &stencils[i];
        for (j, p) in ring.iter_mut().enumerate() {
            let mut d_r = T::zero();
            let mut d_rt = T::zero();
            for (k, w) in s.d1.entries() {
                d_r += values[k * nt + j] * w;
                d_rt += d_t[k * nt + j] * w;
            }
            let mut d_rr = T::zero();
            for (k, w) in s.d2.entries() {
                d_rr += values[k * nt + j] * w;
            }
            let idx = i * nt + j;
            *p = Primitive {
                d_r,
                d_t: d_t[idx],
                d_rr,
                d_rt,
                d_tt: d_tt[idx],
            };
        }
    });
    out
}

pub(crate) fn to_frame<T: Linear>(p: &Primitive<T>, r: f64) -> FrameJet<T> {
    let inv = 1.0 / r;
    let inv2 = inv * inv;
    FrameJet {
        yr: p.d_r,
        yt: p.d_t * inv,
        hrr: p.d_rr,
        hrt: p.d_rt * inv - p.d_t * inv2,
        htt: p.d_r * inv + p.d_tt * inv2,
    }
}

/// Frame jets of nodal values in flat node order.
pub(crate) fn frame_jets<T: Linear>(mesh: &PolarMesh, values: &[T]) -> Vec<FrameJet<T>> {
    let nt = mesh.n_angular();
    primitives(mesh, values)
        .iter()
        .enumerate()
        .map(|(idx, p)| to_frame(p, mesh.radius(idx / nt)))
        .collect()
}

/// Rank-one frame products `x x^T`, `x t^T + t x^T`, `t t^T` at angle `j`.
pub(crate) fn frame_tensors(mesh: &PolarMesh, j: usize) -> [Matrix2<f64>; 3] {
    let (c, s) = mesh.direction(j);
    let xh = Vector2::new(c, s);
    let t = Vector2::new(-s, c);
    [
        xh * xh.transpose(),
        xh * t.transpose() + t * xh.transpose(),
        t * t.transpose(),
    ]
}

/// Cartesian derivatives at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeJet {
    /// `Dy`, columns `dy/dx1`, `dy/dx2`.
    pub dy: Matrix3x2<f64>,
    /// Hessian of each component `y_i`.
    pub d2y: [Matrix2<f64>; 3],
    /// Induced metric `Dy^T Dy`.
    pub metric: Metric2,
}

impl NodeJet {
    /// Squared Frobenius norm of the 3x2x2 array `D^2 y`.
    pub fn hessian_norm_sq(&self) -> f64 {
        self.d2y.iter().map(|m| m.norm_squared()).sum()
    }

    /// `sum_i det D^2 y_i`.
    pub fn hessian_det(&self) -> f64 {
        self.d2y.iter().map(|m| m.determinant()).sum()
    }
}

/// Per-node Cartesian jets of a deformation field.
#[derive(Debug, Clone)]
pub struct JetField {
    mesh: Arc<PolarMesh>,
    nodes: Vec<NodeJet>,
    frame: Vec<FrameJet<nalgebra::Vector3<f64>>>,
}

impl JetField {
    pub fn mesh(&self) -> &Arc<PolarMesh> {
        &self.mesh
    }

    pub fn nodes(&self) -> &[NodeJet] {
        &self.nodes
    }

    pub fn node(&self, i: usize, j: usize) -> &NodeJet {
        &self.nodes[self.mesh.index(i, j)]
    }

    pub(crate) fn frame(&self) -> &[FrameJet<nalgebra::Vector3<f64>>] {
        &self.frame
    }
}

/// Finite-difference jets (sixth order in r, three-point in theta), converted to Cartesian
/// coordinates by the polar chain rule.
pub fn compute_jets(field: &DeformationField) -> Result<JetField> {
    let mesh = field.mesh();
    if mesh.n_radial() < 4 || mesh.n_angular() < 3 {
        return Err(Error::InvalidResolution(
            "mesh too small for the derivative stencils".into(),
        ));
    }
    let nt = mesh.n_angular();
    let frame = frame_jets(mesh, field.values());
    let nodes = frame
        .iter()
        .enumerate()
        .map(|(idx, f)| {
            let (c, s) = mesh.direction(idx % nt);
            let dy = Matrix3x2::from_columns(&[f.yr * c - f.yt * s, f.yr * s + f.yt * c]);
            let [rr, rt, tt] = frame_tensors(mesh, idx % nt);
            let d2y = [0, 1, 2].map(|i| rr * f.hrr[i] + rt * f.hrt[i] + tt * f.htt[i]);
            NodeJet {
                dy,
                d2y,
                metric: Metric2::induced(&dy),
            }
        })
        .collect();
    Ok(JetField {
        mesh: mesh.clone(),
        nodes,
        frame,
    })
}

/// Gradient and Hessian of a scalar field at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarJet {
    pub grad: Vector2<f64>,
    pub hess: Matrix2<f64>,
}

pub fn scalar_jets(field: &ScalarField) -> Vec<ScalarJet> {
    let mesh = field.mesh();
    let nt = mesh.n_angular();
    frame_jets(mesh, field.values())
        .iter()
        .enumerate()
        .map(|(idx, f)| scalar_from_frame(mesh, idx % nt, f))
        .collect()
}

pub(crate) fn scalar_from_frame(mesh: &PolarMesh, j: usize, f: &FrameJet<f64>) -> ScalarJet {
    let (c, s) = mesh.direction(j);
    let [rr, rt, tt] = frame_tensors(mesh, j);
    ScalarJet {
        grad: Vector2::new(f.yr * c - f.yt * s, f.yr * s + f.yt * c),
        hess: rr * f.hrr + rt * f.hrt + tt * f.htt,
    }
}

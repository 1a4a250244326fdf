//! The discrete free energy `int |g_y - g|^2 + h^2 |D^2 y|^2` and its exact
//! gradient with respect to the nodal values.
//!
//! All densities are evaluated in the polar frame `(x_hat, t)`, where the
//! reference metric is `diag(1, 1 - delta^2)`. Frobenius norms are frame
//! independent, so this equals the Cartesian evaluation.

use std::sync::Arc;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Params;
use crate::mesh::jets::{primitives, to_frame, FrameJet};
use crate::mesh::{integrate_region, ring_sums, weighted_ring_sum, DeformationField, PolarMesh};

type V3 = Vector3<f64>;

/// Membrane and bending parts of the energy with their nodal densities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// `int |g_y - g|^2`.
    pub membrane: f64,
    /// `int |D^2 y|^2`.
    pub bending_raw: f64,
    /// `membrane + h^2 bending_raw`.
    pub total: f64,
    #[serde(skip)]
    pub membrane_density: Vec<f64>,
    #[serde(skip)]
    pub bending_density: Vec<f64>,
}

/// Membrane and bending densities at one node.
#[inline]
fn densities(f: &FrameJet<V3>, target_tt: f64) -> (f64, f64) {
    let g_rr = f.yr.norm_squared() - 1.0;
    let g_rt = f.yr.dot(&f.yt);
    let g_tt = f.yt.norm_squared() - target_tt;
    let m = g_rr * g_rr + 2.0 * g_rt * g_rt + g_tt * g_tt;
    let b = f.hrr.norm_squared() + 2.0 * f.hrt.norm_squared() + f.htt.norm_squared();
    (m, b)
}

fn check_params(mesh: &PolarMesh, params: &Params) -> Result<()> {
    params.validate()?;
    if mesh.params() != params {
        return Err(Error::MeshMismatch(format!(
            "mesh built for delta={}, h={} but energy requested for delta={}, h={}",
            mesh.params().delta,
            mesh.params().h,
            params.delta,
            params.h
        )));
    }
    Ok(())
}

/// Nodal membrane and bending densities.
pub(crate) fn density_fields(mesh: &PolarMesh, values: &[V3]) -> (Vec<f64>, Vec<f64>) {
    let nt = mesh.n_angular();
    let target = 1.0 - mesh.params().delta.powi(2);
    primitives(mesh, values)
        .iter()
        .enumerate()
        .map(|(idx, p)| densities(&to_frame(p, mesh.radius(idx / nt)), target))
        .unzip()
}

pub fn energy_breakdown(field: &DeformationField, params: &Params) -> Result<EnergyBreakdown> {
    let mesh = field.mesh();
    check_params(mesh, params)?;
    let (membrane_density, bending_density) = density_fields(mesh, field.values());
    let w = mesh.ring_weights();
    let membrane = weighted_ring_sum(w, &ring_sums(mesh, &membrane_density));
    let bending_raw = weighted_ring_sum(w, &ring_sums(mesh, &bending_density));
    Ok(EnergyBreakdown {
        membrane,
        bending_raw,
        total: membrane + params.h * params.h * bending_raw,
        membrane_density,
        bending_density,
    })
}

pub fn energy_gradient(field: &DeformationField, params: &Params) -> Result<Vec<V3>> {
    let mesh = field.mesh();
    check_params(mesh, params)?;
    let mut grad = vec![V3::zeros(); mesh.len()];
    Objective::new(mesh.clone()).evaluate(field.values(), Some(&mut grad));
    Ok(grad)
}

/// `int_{R <= |x| <= 1} |D^2 y|^2` for each `R`.
pub fn bending_profile(field: &DeformationField, radii: &[f64]) -> Result<Vec<f64>> {
    let mesh = field.mesh();
    let (_, bending) = density_fields(mesh, field.values());
    radii
        .iter()
        .map(|&r| {
            let r = mesh.clamp_radius(r)?;
            if r >= 1.0 {
                Ok(0.0)
            } else {
                integrate_region(&bending, mesh, r, 1.0)
            }
        })
        .collect()
}

/// Energy and gradient evaluation on a fixed mesh.
#[derive(Debug, Clone)]
pub(crate) struct Objective {
    mesh: Arc<PolarMesh>,
}

/// Per-node adjoints of the five stencil outputs.
#[derive(Clone, Copy)]
struct Adjoint {
    d_r: V3,
    d_t: V3,
    d_rr: V3,
    d_rt: V3,
    d_tt: V3,
}

impl Adjoint {
    /// Adjoint of `w (m + h2 b)` given the membrane partials and the
    /// curvature jets in `f`.
    #[inline]
    fn new(f: &FrameJet<V3>, dm_dyr: V3, dm_dyt: V3, w: f64, h2: f64, r: f64) -> Self {
        let s = w * h2;
        Adjoint {
            d_r: dm_dyr * w + f.htt * (2.0 * s / r),
            d_t: dm_dyt * (w / r) - f.hrt * (4.0 * s / (r * r)),
            d_rr: f.hrr * (2.0 * s),
            d_rt: f.hrt * (4.0 * s / r),
            d_tt: f.htt * (2.0 * s / (r * r)),
        }
    }
}

impl Objective {
    pub(crate) fn new(mesh: Arc<PolarMesh>) -> Self {
        Objective { mesh }
    }

    /// Returns `(membrane, bending_raw, total)`; fills `grad` with the
    /// gradient of `total` when given.
    pub(crate) fn evaluate(&self, values: &[V3], grad: Option<&mut [V3]>) -> (f64, f64, f64) {
        let mesh = &*self.mesh;
        let nt = mesh.n_angular();
        let params = mesh.params();
        let h2 = params.h * params.h;
        let target = 1.0 - params.delta * params.delta;
        let prims = primitives(mesh, values);
        let weights = mesh.ring_weights();
        let want_grad = grad.is_some();

        let zero = Adjoint {
            d_r: V3::zeros(),
            d_t: V3::zeros(),
            d_rr: V3::zeros(),
            d_rt: V3::zeros(),
            d_tt: V3::zeros(),
        };
        let mut adj = if want_grad {
            vec![zero; mesh.len()]
        } else {
            Vec::new()
        };
        let ring = |i: usize, adj: Option<&mut [Adjoint]>| -> (f64, f64) {
            let r = mesh.radius(i);
            let w = weights[i];
            let (mut sm, mut sb) = (0.0, 0.0);
            let mut adj = adj;
            for j in 0..nt {
                let f = to_frame(&prims[i * nt + j], r);
                let (m, b) = densities(&f, target);
                sm += m;
                sb += b;
                if let Some(a) = adj.as_deref_mut() {
                    let g_rr = f.yr.norm_squared() - 1.0;
                    let g_rt = f.yr.dot(&f.yt);
                    let g_tt = f.yt.norm_squared() - target;
                    let dm_dyr = (f.yr * g_rr + f.yt * g_rt) * 4.0;
                    let dm_dyt = (f.yr * g_rt + f.yt * g_tt) * 4.0;
                    a[j] = Adjoint::new(&f, dm_dyr, dm_dyt, w, h2, r);
                }
            }
            (sm, sb)
        };
        let sums: Vec<(f64, f64)> = if want_grad {
            adj.par_chunks_mut(nt)
                .enumerate()
                .map(|(i, a)| ring(i, Some(a)))
                .collect()
        } else {
            (0..mesh.n_radial())
                .into_par_iter()
                .map(|i| ring(i, None))
                .collect()
        };
        let mut membrane = 0.0;
        let mut bending = 0.0;
        for (w, (m, b)) in weights.iter().zip(&sums) {
            membrane += w * m;
            bending += w * b;
        }
        if let Some(grad) = grad {
            self.backpropagate(&adj, grad);
        }
        (membrane, bending, membrane + h2 * bending)
    }

    /// Product of the Gauss-Newton Hessian at `reference` (frame jets of a
    /// field on this mesh) with `d`. The bending part is exact.
    pub(crate) fn gauss_newton_product(
        &self,
        reference: &[FrameJet<V3>],
        d: &[V3],
        out: &mut [V3],
    ) {
        let mesh = &*self.mesh;
        let nt = mesh.n_angular();
        let h2 = mesh.params().h.powi(2);
        let weights = mesh.ring_weights();
        let prims = primitives(mesh, d);
        let mut adj: Vec<Adjoint> = Vec::with_capacity(mesh.len());
        for (idx, (p, y)) in prims.iter().zip(reference).enumerate() {
            let i = idx / nt;
            let r = mesh.radius(i);
            let f = to_frame(p, r);
            let g_rr = 2.0 * y.yr.dot(&f.yr);
            let g_rt = y.yr.dot(&f.yt) + y.yt.dot(&f.yr);
            let g_tt = 2.0 * y.yt.dot(&f.yt);
            let dm_dyr = (y.yr * g_rr + y.yt * g_rt) * 4.0;
            let dm_dyt = (y.yr * g_rt + y.yt * g_tt) * 4.0;
            adj.push(Adjoint::new(&f, dm_dyr, dm_dyt, weights[i], h2, r));
        }
        self.backpropagate(&adj, out);
    }

    /// `grad = D_r^T a_r + D_rr^T a_rr + D_t^T (a_t + D_r^T a_rt) + D_tt^T a_tt`.
    fn backpropagate(&self, adj: &[Adjoint], grad: &mut [V3]) {
        let mesh = &*self.mesh;
        let nt = mesh.n_angular();
        let tr = mesh.transposed();
        let (c1, c2) = mesh.angular();
        // angular adjoint input: a_t + D_r^T a_rt
        let mut ang = vec![V3::zeros(); mesh.len()];
        ang.par_chunks_mut(nt).enumerate().for_each(|(k, out)| {
            for (j, o) in out.iter_mut().enumerate() {
                let mut s = adj[k * nt + j].d_t;
                for &(i, w) in &tr.d1[k] {
                    s += adj[i * nt + j].d_rt * w;
                }
                *o = s;
            }
        });
        grad.par_chunks_mut(nt).enumerate().for_each(|(k, out)| {
            let row = k * nt;
            for (j, o) in out.iter_mut().enumerate() {
                let next = (j + 1) % nt;
                let prev = (j + nt - 1) % nt;
                let mut g = V3::zeros();
                for &(i, w) in &tr.d1[k] {
                    g += adj[i * nt + j].d_r * w;
                }
                for &(i, w) in &tr.d2[k] {
                    g += adj[i * nt + j].d_rr * w;
                }
                // D_t is antisymmetric, D_tt symmetric
                g -= (ang[row + next] - ang[row + prev]) * c1;
                let a = |jj: usize| adj[row + jj].d_tt;
                g += (a(next) + a(prev) - a(j) * 2.0) * c2;
                *o = g;
            }
        });
    }
}

//! Numerical checks of the curvature identities behind the lower bound:
//! the weak Hessian determinant, its pairing with a logarithmic test
//! function, the ring bound and the isoperimetric inequality.
//!
//! The punctured mesh cannot see the disk `B_{r_inner}`. Its curvature mass
//! `int_{B_rin} sum det D^2 y_i` is recovered from the boundary flux
//! `1/2 oint (cof D^2 y_i grad y_i) . n`, which is exact for C^2 fields and
//! equals `pi delta^2` for the cone.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::energy::density_fields;
use crate::error::{Error, Result};
use crate::geometry::Params;
use crate::mesh::jets::{frame_jets, FrameJet};
use crate::mesh::{
    compute_jets, integrate_region, integrate_ring, ring_from_sums, ring_sums, DeformationField,
    JetField, PolarMesh, ScalarField,
};

type V3 = Vector3<f64>;

/// `Phi = log(R / h0)` on `B_h0`, `log(R / |x|)` on the annulus, `0` outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionPhi {
    pub h0: f64,
    pub big_r: f64,
}

impl TestFunctionPhi {
    pub fn new(h0: f64, big_r: f64) -> Result<Self> {
        if !(h0 > 0.0 && h0 < big_r && big_r <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "test function needs 0 < h0 < R <= 1, got h0={h0}, R={big_r}"
            )));
        }
        Ok(TestFunctionPhi { h0, big_r })
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.big_r / r.clamp(self.h0, self.big_r)).ln()
    }

    /// Radial derivative; `DPhi = phi'(r) x_hat`.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        if r > self.h0 && r < self.big_r {
            -1.0 / r
        } else {
            0.0
        }
    }

    /// Absolutely continuous part of `D^2 Phi` in the polar frame,
    /// `(rr, tt)` coefficients: `(x_hat x_hat - t t) / r^2` on the annulus.
    pub fn hessian_ac(&self, r: f64) -> (f64, f64) {
        if r > self.h0 && r < self.big_r {
            (1.0 / (r * r), -1.0 / (r * r))
        } else {
            (0.0, 0.0)
        }
    }

    /// Line densities of the singular part `c x_hat x_hat H^1` on the
    /// circles `|x| = h0` and `|x| = R`: the jumps of `phi'`.
    pub fn ring_masses(&self) -> [(f64, f64); 2] {
        [(self.h0, -1.0 / self.h0), (self.big_r, 1.0 / self.big_r)]
    }
}

/// Slices of small ring membrane energy near the core and near `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceSelection {
    pub h0: f64,
    pub r0: f64,
    /// `oint_{|x| = h0} |g_y - g|^2`.
    pub h0_membrane: f64,
    /// `oint_{|x| = r0} |g_y - g|^2`.
    pub r0_membrane: f64,
}

/// Both sides of the weak-form identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakForm {
    pub lhs: f64,
    pub rhs: f64,
}

impl WeakForm {
    /// `|lhs - rhs| / (|lhs| + |rhs| + 1)`.
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).abs() / (self.lhs.abs() + self.rhs.abs() + 1.0)
    }
}

/// Both sides of the isoperimetric inequality on one circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsoperCheck {
    /// `oint |D^2 v|` with the Frobenius norm.
    pub lhs: f64,
    /// `oint |D^2 v t|`, the tangential part only; `lhs >= lhs_tangential`.
    pub lhs_tangential: f64,
    /// `(4 pi |int_{B_r} det D^2 v|)^(1/2)`.
    pub rhs: f64,
}

/// Per-node `sum_i det D^2 y_i`.
pub fn hessian_det_density(jets: &JetField) -> Vec<f64> {
    jets.nodes().iter().map(|n| n.hessian_det()).collect()
}

#[inline]
fn det<T: Comp>(f: &FrameJet<T>) -> f64 {
    f.hrr.dot(&f.htt) - f.hrt.dot(&f.hrt)
}

/// Minimal dot-product abstraction over scalar and vector jets.
trait Comp: Copy {
    fn dot(&self, other: &Self) -> f64;
}

impl Comp for f64 {
    fn dot(&self, other: &Self) -> f64 {
        self * other
    }
}

impl Comp for V3 {
    fn dot(&self, other: &Self) -> f64 {
        self.dot(other)
    }
}

/// `int_{B_rin} sum det D^2 y_i` from the flux through the inner circle.
fn hole_mass<T: Comp>(mesh: &PolarMesh, frame: &[FrameJet<T>]) -> f64 {
    let flux: f64 = frame[..mesh.n_angular()]
        .iter()
        .map(|f| f.htt.dot(&f.yr) - f.hrt.dot(&f.yt))
        .sum();
    0.5 * mesh.r_inner() * mesh.dtheta() * flux
}

fn det_integral<T: Comp>(mesh: &PolarMesh, frame: &[FrameJet<T>], r: f64) -> Result<f64> {
    let r = mesh.clamp_radius(r)?;
    let mass = hole_mass(mesh, frame);
    if r <= mesh.r_inner() {
        return Ok(mass);
    }
    let density: Vec<f64> = frame.iter().map(det).collect();
    Ok(mass + integrate_region(&density, mesh, mesh.r_inner(), r)?)
}

/// `int_{B_r} sum det D^2 y_i`, the excised disk included via its boundary flux.
pub fn hessian_det_integral(jets: &JetField, r: f64) -> Result<f64> {
    det_integral(jets.mesh(), jets.frame(), r)
}

fn check_phi(mesh: &PolarMesh, phi: &TestFunctionPhi) -> Result<()> {
    mesh.clamp_radius(phi.h0)?;
    mesh.clamp_radius(phi.big_r)?;
    Ok(())
}

/// Both sides of `int (sum det D^2 y_i - pi delta^2 delta_0) Phi
/// = -1/2 int (g_y - g) : cof D^2 Phi`.
pub fn pair_weak_form(
    field: &DeformationField,
    params: &Params,
    phi: &TestFunctionPhi,
) -> Result<WeakForm> {
    let mesh = field.mesh();
    params.validate()?;
    check_phi(mesh, phi)?;
    let frame = frame_jets(mesh, field.values());
    let nt = mesh.n_angular();
    let phi0 = phi.value(0.0);

    // lhs: Phi is constant on B_h0 and log(R/r) on the annulus
    let core = det_integral(mesh, &frame, phi.h0)?;
    let weighted: Vec<f64> = frame
        .iter()
        .enumerate()
        .map(|(idx, f)| det(f) * (phi.big_r / mesh.radius(idx / nt)).ln())
        .collect();
    let annulus = integrate_region(&weighted, mesh, phi.h0, phi.big_r)?;
    let lhs = phi0 * core + annulus - PI * params.delta * params.delta * phi0;

    // rhs: G = g_y - g in the frame, paired with cof D^2 Phi
    let target = 1.0 - params.delta * params.delta;
    let g_tt: Vec<f64> = frame.iter().map(|f| f.yt.norm_squared() - target).collect();
    let ac: Vec<f64> = frame
        .iter()
        .zip(&g_tt)
        .enumerate()
        .map(|(idx, (f, gtt))| {
            let r = mesh.radius(idx / nt);
            (gtt - (f.yr.norm_squared() - 1.0)) / (r * r)
        })
        .collect();
    let mut pairing = integrate_region(&ac, mesh, phi.h0, phi.big_r)?;
    let sums = ring_sums(mesh, &g_tt);
    for (r, c) in phi.ring_masses() {
        // cof(x_hat x_hat) = t t
        pairing += c * ring_from_sums(mesh, &sums, r)?;
    }
    Ok(WeakForm {
        lhs,
        rhs: -0.5 * pairing,
    })
}

/// Both sides of `oint_{|x|=r} |D^2 v| >= (4 pi |int_{B_r} det D^2 v|)^(1/2)`.
pub fn isoper_check(v: &ScalarField, r: f64) -> Result<IsoperCheck> {
    let mesh = v.mesh();
    let frame = frame_jets(mesh, v.values());
    let frob: Vec<f64> = frame
        .iter()
        .map(|f| (f.hrr * f.hrr + 2.0 * f.hrt * f.hrt + f.htt * f.htt).sqrt())
        .collect();
    let tang: Vec<f64> = frame.iter().map(|f| f.hrt.hypot(f.htt)).collect();
    let mass = det_integral(mesh, &frame, r)?;
    Ok(IsoperCheck {
        lhs: integrate_ring(&frob, mesh, r)?,
        lhs_tangential: integrate_ring(&tang, mesh, r)?,
        rhs: (4.0 * PI * mass.abs()).sqrt(),
    })
}

/// Both sides of `oint_{|x|=r} |D^2 y|^2 >= (2/r) |int_{B_r} sum det D^2 y_i|`.
pub fn ring_bound_check(jets: &JetField, r: f64) -> Result<(f64, f64)> {
    let mesh = jets.mesh();
    let r = mesh.clamp_radius(r)?;
    let bending: Vec<f64> = jets.nodes().iter().map(|n| n.hessian_norm_sq()).collect();
    let lhs = integrate_ring(&bending, mesh, r)?;
    let rhs = 2.0 / r * hessian_det_integral(jets, r)?.abs();
    Ok((lhs, rhs))
}

/// Ring with the smallest membrane line integral among node rings in
/// `[lo, hi]`; ties go to the smaller radius.
fn min_ring(mesh: &PolarMesh, line: &[f64], lo: f64, hi: f64) -> Result<(f64, f64)> {
    let lo = mesh.clamp_radius(lo)?;
    let hi = mesh.clamp_radius(hi)?;
    let candidates: Vec<(f64, f64)> = (0..mesh.n_radial())
        .map(|i| (mesh.radius(i), line[i]))
        .filter(|(r, _)| *r >= lo && *r <= hi)
        .collect();
    let scale = candidates.iter().map(|c| c.1.abs()).fold(0.0, f64::max);
    let tie = 1e-12 * (1.0 + scale);
    candidates
        .into_iter()
        .reduce(|best, c| if c.1 < best.1 - tie { c } else { best })
        .ok_or(Error::EmptyRegion { lo, hi })
}

/// Picks `h0 in [h, 2h]` and `R0 in [R - h, R]` minimizing the membrane
/// energy on the circle.
pub fn select_slices(
    field: &DeformationField,
    params: &Params,
    big_r: f64,
) -> Result<SliceSelection> {
    let mesh = field.mesh();
    params.validate()?;
    let h = params.h;
    let (membrane, _) = density_fields(mesh, field.values());
    let line: Vec<f64> = ring_sums(mesh, &membrane)
        .iter()
        .enumerate()
        .map(|(i, s)| s * mesh.radius(i) * mesh.dtheta())
        .collect();
    let (h0, h0_membrane) = min_ring(mesh, &line, h, 2.0 * h)?;
    let (r0, r0_membrane) = min_ring(mesh, &line, big_r - h, big_r)?;
    Ok(SliceSelection {
        h0,
        r0,
        h0_membrane,
        r0_membrane,
    })
}

/// Resolution-scaled tolerance `c (dtheta^2 + dlog(r)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub c: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { c: 1.0 }
    }
}

impl Tolerance {
    pub fn for_mesh(&self, mesh: &PolarMesh) -> f64 {
        self.c * (mesh.dtheta().powi(2) + mesh.log_step().powi(2))
    }
}

/// Point `(r, value)` of a radial profile.
pub type Sample = (f64, f64);

/// Curvature diagnostics of one field, serializable for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub delta: f64,
    pub h: f64,
    /// Ring mean of `sum det D^2 y_i`.
    pub det_density: Vec<Sample>,
    /// `int_{B_r} sum det D^2 y_i`.
    pub det_integral: Vec<Sample>,
    /// Both sides of the pairing with `Phi(h0 = slice, R = r)`.
    pub weak_form_lhs: Vec<Sample>,
    pub weak_form_rhs: Vec<Sample>,
    /// `lhs / rhs` of the ring bound.
    pub ring_bound_ratio: Vec<Sample>,
    pub slices: Option<SliceSelection>,
    pub tolerance: f64,
    pub weak_form_agrees: bool,
}

pub fn curvature_report(
    field: &DeformationField,
    params: &Params,
    radii: &[f64],
    tolerance: &Tolerance,
) -> Result<CurvatureReport> {
    let mesh = field.mesh();
    let jets = compute_jets(field)?;
    let density = hessian_det_density(&jets);
    let nt = mesh.n_angular() as f64;
    let det_density = ring_sums(mesh, &density)
        .iter()
        .enumerate()
        .map(|(i, s)| (mesh.radius(i), s / nt))
        .collect();
    let h0 = (1.5 * params.h).max(mesh.r_inner());
    let mut out = CurvatureReport {
        delta: params.delta,
        h: params.h,
        det_density,
        det_integral: Vec::new(),
        weak_form_lhs: Vec::new(),
        weak_form_rhs: Vec::new(),
        ring_bound_ratio: Vec::new(),
        slices: None,
        tolerance: tolerance.for_mesh(mesh),
        weak_form_agrees: true,
    };
    for &r in radii {
        out.det_integral.push((r, hessian_det_integral(&jets, r)?));
        let (lhs, rhs) = ring_bound_check(&jets, r)?;
        out.ring_bound_ratio
            .push((r, if rhs > 0.0 { lhs / rhs } else { f64::INFINITY }));
        if r > h0 {
            let w = pair_weak_form(field, params, &TestFunctionPhi::new(h0, r)?)?;
            out.weak_form_agrees &= w.relative_error() <= out.tolerance;
            out.weak_form_lhs.push((r, w.lhs));
            out.weak_form_rhs.push((r, w.rhs));
        }
    }
    if let Some(&r_max) = radii.iter().max_by(|a, b| a.total_cmp(b)) {
        if r_max - params.h >= 2.0 * params.h {
            out.slices = Some(select_slices(field, params, r_max)?);
        }
    }
    Ok(out)
}

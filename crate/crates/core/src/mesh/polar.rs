use std::f64::consts::PI;

use nalgebra::Vector2;

use super::stencil::{
    angular_coefficients, radial_stencils, transpose, RadialStencils, Transposed,
};
use crate::error::{Error, Result};
use crate::geometry::Params;

/// Puncture radius as a fraction of the thickness: `r_inner = h / 16`.
pub const INNER_RADIUS_FACTOR: f64 = 16.0;
/// Smallest resolution accepted by [`build_mesh`].
pub const MIN_RESOLUTION: usize = 16;

/// Graded polar grid on the annulus `r_inner <= |x| <= 1`.
///
/// Radii are log-uniform; the angular direction is uniform and periodic.
/// Node `(i, j)` (ring `i`, angle `j`) has flat index `i * n_angular + j`.
#[derive(Debug, Clone)]
pub struct PolarMesh {
    params: Params,
    radii: Vec<f64>,
    log_step: f64,
    n_angular: usize,
    dtheta: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    ring_weights: Vec<f64>,
    stencils: Vec<RadialStencils>,
    transposed: Transposed,
    angular: (f64, f64),
}

impl PartialEq for PolarMesh {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.n_angular == other.n_angular
            && self.radii == other.radii
    }
}

/// `n` log-uniform radii from `r_inner` to exactly 1.
pub fn log_uniform_radii(r_inner: f64, n: usize) -> Vec<f64> {
    let span = -r_inner.ln();
    (0..n)
        .map(|i| {
            if i + 1 == n {
                1.0
            } else {
                r_inner * (span * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Mesh for `params` with the standard puncture `h / 16`.
pub fn build_mesh(params: &Params, n_radial: usize, n_angular: usize) -> Result<PolarMesh> {
    if n_radial < MIN_RESOLUTION || n_angular < MIN_RESOLUTION || n_angular % 2 != 0 {
        return Err(Error::InvalidResolution(format!(
            "need n_radial >= {MIN_RESOLUTION} and even n_angular >= {MIN_RESOLUTION}, got {n_radial} x {n_angular}"
        )));
    }
    PolarMesh::new(params, params.h / INNER_RADIUS_FACTOR, n_radial, n_angular)
}

impl PolarMesh {
    /// Mesh with an explicit puncture radius.
    pub fn new(params: &Params, r_inner: f64, n_radial: usize, n_angular: usize) -> Result<Self> {
        params.validate()?;
        if !(r_inner > 0.0 && r_inner < 1.0) {
            return Err(Error::InvalidResolution(format!(
                "inner radius must lie in (0, 1), got {r_inner}"
            )));
        }
        if n_radial < 4 || n_angular < 4 {
            return Err(Error::InvalidResolution(format!(
                "mesh {n_radial} x {n_angular} is too small for the stencils"
            )));
        }
        let radii = log_uniform_radii(r_inner, n_radial);
        let log_step = -r_inner.ln() / (n_radial - 1) as f64;
        let dtheta = 2.0 * PI / n_angular as f64;
        let (sin, cos): (Vec<f64>, Vec<f64>) = (0..n_angular)
            .map(|j| (j as f64 * dtheta).sin_cos())
            .unzip();
        let stencils = radial_stencils(&radii);
        let transposed = transpose(&stencils);
        let mut mesh = PolarMesh {
            params: *params,
            radii,
            log_step,
            n_angular,
            dtheta,
            cos,
            sin,
            ring_weights: Vec::new(),
            stencils,
            transposed,
            angular: angular_coefficients(dtheta),
        };
        mesh.ring_weights = mesh.region_ring_weights(r_inner, 1.0)?;
        Ok(mesh)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn r_inner(&self) -> f64 {
        self.radii[0]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn n_radial(&self) -> usize {
        self.radii.len()
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.n_angular
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Uniform step in `log r`.
    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta
    }

    /// `(cos theta_j, sin theta_j)`.
    pub fn direction(&self, j: usize) -> (f64, f64) {
        (self.cos[j], self.sin[j])
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_angular + j
    }

    pub fn point(&self, i: usize, j: usize) -> Vector2<f64> {
        self.radii[i] * Vector2::new(self.cos[j], self.sin[j])
    }

    /// Node positions in flat order.
    pub fn points(&self) -> impl Iterator<Item = Vector2<f64>> + '_ {
        (0..self.n_radial()).flat_map(move |i| (0..self.n_angular).map(move |j| self.point(i, j)))
    }

    /// Quadrature weight of every node on ring `i` over the whole annulus.
    pub fn ring_weight(&self, i: usize) -> f64 {
        self.ring_weights[i]
    }

    pub fn ring_weights(&self) -> &[f64] {
        &self.ring_weights
    }

    /// Sum of all node weights (the annulus area).
    pub fn total_weight(&self) -> f64 {
        self.ring_weights.iter().sum::<f64>() * self.n_angular as f64
    }

    pub(crate) fn stencils(&self) -> &[RadialStencils] {
        &self.stencils
    }

    pub(crate) fn transposed(&self) -> &Transposed {
        &self.transposed
    }

    /// Fitted angular stencil coefficients `(c1, c2)`.
    pub(crate) fn angular(&self) -> (f64, f64) {
        self.angular
    }

    /// Checks that `r` lies in the mesh range (with a relative slack of
    /// 1e-12) and clamps it.
    pub fn clamp_radius(&self, r: f64) -> Result<f64> {
        let (lo, hi) = (self.r_inner(), 1.0);
        if !(r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12)) {
            return Err(Error::RadiusOutOfRange { r, lo, hi });
        }
        Ok(r.clamp(lo, hi))
    }

    /// Index `k` of the cell `[r_k, r_{k+1}]` containing `r`.
    pub(crate) fn cell_of(&self, r: f64) -> usize {
        let pos = (r / self.r_inner()).ln() / self.log_step;
        let mut k = (pos.floor().max(0.0) as usize).min(self.n_radial() - 2);
        // guard against rounding at cell boundaries
        while k > 0 && r < self.radii[k] {
            k -= 1;
        }
        while k + 2 < self.n_radial() && r >= self.radii[k + 1] {
            k += 1;
        }
        k
    }

    /// Per-ring weights (angular factor included) that integrate a nodal
    /// density over `r_lo <= |x| <= r_hi`.
    ///
    /// Within each cell the density is interpolated in the span of
    /// `{1, r^-2}`; both the area element and the cone's `r^-2` densities
    /// are therefore integrated exactly, and partial cells are cut at the
    /// region boundary.
    pub fn region_ring_weights(&self, r_lo: f64, r_hi: f64) -> Result<Vec<f64>> {
        let lo = self.clamp_radius(r_lo)?;
        let hi = self.clamp_radius(r_hi)?;
        if !(lo < hi) {
            return Err(Error::EmptyRegion { lo: r_lo, hi: r_hi });
        }
        let mut w = vec![0.0; self.n_radial()];
        let first = self.cell_of(lo);
        let last = self.cell_of(hi);
        for k in first..=last {
            let (ra, rb) = (self.radii[k], self.radii[k + 1]);
            let (p, q) = (lo.max(ra), hi.min(rb));
            if p >= q {
                continue;
            }
            let (ca, cb) = cell_weights(ra, rb, p, q);
            w[k] += ca * self.dtheta;
            w[k + 1] += cb * self.dtheta;
        }
        Ok(w)
    }

    /// Interpolation weights `(k, wa, wb)` so that the density at radius
    /// `r` is `wa f_k + wb f_{k+1}`.
    pub(crate) fn ring_interpolation(&self, r: f64) -> Result<(usize, f64, f64)> {
        let r = self.clamp_radius(r)?;
        let k = self.cell_of(r);
        let (ra, rb) = (self.radii[k], self.radii[k + 1]);
        let (qa, qb, q) = (ra.powi(-2), rb.powi(-2), r.powi(-2));
        let d = qa - qb;
        Ok((k, (q - qb) / d, (qa - q) / d))
    }
}

/// Weights of the two end values for `int_p^q f(r) r dr`, where `f` is the
/// `{1, r^-2}` interpolant through `(ra, fa)` and `(rb, fb)`.
fn cell_weights(ra: f64, rb: f64, p: f64, q: f64) -> (f64, f64) {
    let qa = ra.powi(-2);
    let qb = rb.powi(-2);
    let d = qa - qb;
    let area = 0.5 * (q * q - p * p);
    let log = (q / p).ln();
    ((log - qb * area) / d, (qa * area - log) / d)
}

//! Preconditioner built from the Gauss-Newton Hessian at the axisymmetric
//! part of an iterate.
//!
//! On an axisymmetric reference the Hessian commutes with rotations of the
//! mesh, so in cylindrical components it is a convolution in `theta`. Each
//! angular Fourier mode then decouples into a banded Hermitian system over
//! `(ring, component)`, factored once by banded Cholesky.

#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::align::procrustes;
use crate::energy::Objective;
use crate::geometry::cone_map;
use crate::mesh::jets::frame_jets;
use crate::mesh::PolarMesh;

type V3 = Vector3<f64>;

/// Lower band of a Hermitian positive definite matrix, factored in place.
#[derive(Debug, Clone)]
struct BandCholesky {
    n: usize,
    bw: usize,
    /// `l[i * (bw + 1) + (i - j)]` holds entry `(i, j)`, `i - bw <= j <= i`.
    l: Vec<Complex64>,
}

impl BandCholesky {
    fn zeros(n: usize, bw: usize) -> Self {
        BandCholesky {
            n,
            bw,
            l: vec![Complex64::new(0.0, 0.0); n * (bw + 1)],
        }
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.l[i * (self.bw + 1) + (i - j)]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.l[i * (self.bw + 1) + (i - j)]
    }

    fn max_diag(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).re).fold(0.0, f64::max)
    }

    /// Factors in place; returns `false` if a pivot is not positive.
    fn factor(&mut self) -> bool {
        let (n, bw) = (self.n, self.bw);
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut d = self.get(j, j).re;
            for k in lo..j {
                d -= self.get(j, k).norm_sqr();
            }
            if !(d > 0.0) {
                return false;
            }
            let d = d.sqrt();
            *self.at(j, j) = Complex64::new(d, 0.0);
            for i in j + 1..(j + bw + 1).min(n) {
                let mut s = self.get(i, j);
                for k in i.saturating_sub(bw)..j {
                    s -= self.get(i, k) * self.get(j, k).conj();
                }
                *self.at(i, j) = s / d;
            }
        }
        true
    }

    fn solve(&self, b: &mut [Complex64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.get(i, k) * b[k];
            }
            b[i] = s / self.get(i, i).re;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.get(k, i).conj() * b[k];
            }
            b[i] = s / self.get(i, i).re;
        }
    }
}

pub(crate) struct FourierPreconditioner {
    /// Orientation taking the iterate closest to the upright cone.
    frame: Matrix3<f64>,
    nr: usize,
    nt: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    /// Factors for modes `0..=nt/2`; the rest are conjugates.
    modes: Vec<BandCholesky>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

/// Largest ring offset of any radial stencil.
fn stencil_reach(mesh: &PolarMesh) -> usize {
    mesh.stencils()
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            [s.d1, s.d2]
                .into_iter()
                .flat_map(move |st| [st.start.abs_diff(i), (st.start + st.len - 1).abs_diff(i)])
        })
        .max()
        .unwrap_or(0)
}

#[inline]
fn to_cyl(v: &V3, c: f64, s: f64) -> V3 {
    V3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
}

#[inline]
fn from_cyl(v: &V3, c: f64, s: f64) -> V3 {
    V3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

impl FourierPreconditioner {
    /// Builds the preconditioner for the Gauss-Newton Hessian at the
    /// axisymmetric average of `x`, shifted by `shift` times the nodal
    /// quadrature weights.
    pub(crate) fn new(objective: &Objective, mesh: &PolarMesh, x: &[V3], shift: f64) -> Self {
        let (nr, nt) = (mesh.n_radial(), mesh.n_angular());
        let (cos, sin): (Vec<f64>, Vec<f64>) = (0..nt).map(|j| mesh.direction(j)).unzip();
        let cone: Vec<V3> = mesh
            .points()
            .map(|p| cone_map(&p, mesh.params().delta))
            .collect();
        let node_weights: Vec<f64> = (0..nr * nt).map(|k| mesh.ring_weight(k / nt)).collect();
        let frame = procrustes(x, &cone, &node_weights)
            .map(|(m, _)| m.rotation)
            .unwrap_or_else(|_| Matrix3::identity());
        let profile: Vec<V3> = (0..nr)
            .map(|i| {
                (0..nt)
                    .map(|j| to_cyl(&(frame * x[i * nt + j]), cos[j], sin[j]))
                    .sum::<V3>()
                    / nt as f64
            })
            .collect();
        let sym: Vec<V3> = (0..nr * nt)
            .map(|k| from_cyl(&profile[k / nt], cos[k % nt], sin[k % nt]))
            .collect();
        let reference = frame_jets(mesh, &sym);

        let reach = 2 * stencil_reach(mesh);
        let spacing = 2 * reach + 1;
        let bw = 3 * reach + 2;
        let half = nt / 2 + 1;
        let mut modes: Vec<BandCholesky> =
            (0..half).map(|_| BandCholesky::zeros(3 * nr, bw)).collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(nt);
        let ifft = planner.plan_fft_inverse(nt);

        let weights = mesh.ring_weights();
        let mut probe = vec![V3::zeros(); nr * nt];
        let mut out = vec![V3::zeros(); nr * nt];
        let mut line = vec![Complex64::new(0.0, 0.0); nt];
        for color in 0..spacing.min(nr) {
            for comp in 0..3 {
                probe.iter_mut().for_each(|v| *v = V3::zeros());
                for i in (color..nr).step_by(spacing) {
                    probe[i * nt][comp] = 1.0;
                }
                objective.gauss_newton_product(&reference, &probe, &mut out);
                for i in (color..nr).step_by(spacing) {
                    let col = 3 * i + comp;
                    out[i * nt][comp] += shift * weights[i];
                    for ip in i.saturating_sub(reach)..(i + reach + 1).min(nr) {
                        for cp in 0..3 {
                            for (j, l) in line.iter_mut().enumerate() {
                                let v = to_cyl(&out[ip * nt + j], cos[j], sin[j]);
                                *l = Complex64::new(v[cp], 0.0);
                            }
                            fft.process(&mut line);
                            let row = 3 * ip + cp;
                            for (k, m) in modes.iter_mut().enumerate() {
                                let b = line[k];
                                if row == col {
                                    *m.at(row, col) += b;
                                } else if row > col {
                                    *m.at(row, col) += b * 0.5;
                                } else {
                                    *m.at(col, row) += b.conj() * 0.5;
                                }
                            }
                        }
                    }
                }
            }
        }
        modes.par_iter_mut().for_each(|m| {
            for i in 0..m.n {
                let d = m.at(i, i);
                d.im = 0.0;
            }
            let scale = m.max_diag();
            let backup = m.l.clone();
            let mut tau = 1e-12 * scale;
            while !m.factor() {
                m.l.clone_from(&backup);
                for i in 0..m.n {
                    m.at(i, i).re += tau;
                }
                tau *= 100.0;
            }
        });
        FourierPreconditioner {
            frame,
            nr,
            nt,
            cos,
            sin,
            modes,
            fft,
            ifft,
        }
    }

    /// `P^{-1} q`.
    pub(crate) fn apply(&self, q: &[V3]) -> Vec<V3> {
        let (nr, nt) = (self.nr, self.nt);
        let n3 = 3 * nr;
        // spectra[k][3 i + c]
        let mut spectra = vec![vec![Complex64::new(0.0, 0.0); n3]; nt];
        let mut line = vec![Complex64::new(0.0, 0.0); nt];
        for i in 0..nr {
            for c in 0..3 {
                for (j, l) in line.iter_mut().enumerate() {
                    let v = self.frame * q[i * nt + j];
                    *l = Complex64::new(to_cyl(&v, self.cos[j], self.sin[j])[c], 0.0);
                }
                self.fft.process(&mut line);
                for (k, s) in spectra.iter_mut().enumerate() {
                    s[3 * i + c] = line[k];
                }
            }
        }
        spectra[..self.modes.len()]
            .par_iter_mut()
            .zip(&self.modes)
            .for_each(|(s, m)| m.solve(s));
        for k in self.modes.len()..nt {
            let (lo, hi) = spectra.split_at_mut(k);
            for (d, s) in hi[0].iter_mut().zip(&lo[nt - k]) {
                *d = s.conj();
            }
        }
        let mut z = vec![V3::zeros(); nr * nt];
        let scale = 1.0 / nt as f64;
        let mut cyl = vec![V3::zeros(); nt];
        for i in 0..nr {
            for c in 0..3 {
                for (k, l) in line.iter_mut().enumerate() {
                    *l = spectra[k][3 * i + c];
                }
                self.ifft.process(&mut line);
                for (j, v) in cyl.iter_mut().enumerate() {
                    v[c] = line[j].re * scale;
                }
            }
            for (j, v) in cyl.iter().enumerate() {
                z[i * nt + j] = self.frame.transpose() * from_cyl(v, self.cos[j], self.sin[j]);
            }
        }
        z
    }
}

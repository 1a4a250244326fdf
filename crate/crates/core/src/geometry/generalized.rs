//! One-homogeneous maps `x -> |x| gamma(x/|x|)` built from closed spherical
//! curves of constant speed `sqrt(1 - delta^2)`.
//!
//! Curves are stored as trigonometric polynomials in the arc parameter, so
//! `gamma'` and `gamma''` are evaluated exactly. Arbitrary smooth curves are
//! brought to constant speed once, at construction, by spectral
//! reparametrization.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::Rng;

use super::cone::contraction;
use crate::error::{Error, Result};

/// Closed curve `c0 + sum_k cos_k cos(k t) + sin_k sin(k t)` in R^3.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigCurve {
    pub c0: Vector3<f64>,
    pub cos: Vec<Vector3<f64>>,
    pub sin: Vec<Vector3<f64>>,
}

impl TrigCurve {
    pub fn degree(&self) -> usize {
        self.cos.len()
    }

    /// Value and first two derivatives at `t`.
    pub fn eval(&self, t: f64) -> [Vector3<f64>; 3] {
        let mut p = self.c0;
        let mut d1 = Vector3::zeros();
        let mut d2 = Vector3::zeros();
        let (s1, c1) = t.sin_cos();
        let (mut sk, mut ck) = (0.0, 1.0);
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            // angle addition keeps (ck, sk) = (cos kt, sin kt)
            let next_c = ck * c1 - sk * s1;
            let next_s = sk * c1 + ck * s1;
            ck = next_c;
            sk = next_s;
            let kf = (k + 1) as f64;
            p += a * ck + b * sk;
            d1 += kf * (b * ck - a * sk);
            d2 -= kf * kf * (a * ck + b * sk);
        }
        [p, d1, d2]
    }

    fn rotated(&self, rot: &Matrix3<f64>) -> Self {
        TrigCurve {
            c0: rot * self.c0,
            cos: self.cos.iter().map(|v| rot * v).collect(),
            sin: self.sin.iter().map(|v| rot * v).collect(),
        }
    }

    /// Least-squares trigonometric fit of degree `degree` to uniform samples.
    fn fit(samples: &[Vector3<f64>], degree: usize) -> Self {
        let m = samples.len();
        assert!(2 * degree < m, "fit degree too high for sample count");
        let mf = m as f64;
        let c0 = samples.iter().sum::<Vector3<f64>>() / mf;
        let mut cos = Vec::with_capacity(degree);
        let mut sin = Vec::with_capacity(degree);
        for k in 1..=degree {
            let mut a = Vector3::zeros();
            let mut b = Vector3::zeros();
            for (i, s) in samples.iter().enumerate() {
                // reduce k*i mod m before scaling to keep the phase exact
                let phase = 2.0 * PI * ((k * i) % m) as f64 / mf;
                let (sn, cs) = phase.sin_cos();
                a += s * cs;
                b += s * sn;
            }
            cos.push(a * (2.0 / mf));
            sin.push(b * (2.0 / mf));
        }
        TrigCurve { c0, cos, sin }
    }
}

/// Spherical curve of constant speed defining a generalized cone.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedCone {
    delta: f64,
    curve: TrigCurve,
}

/// Samples used by the arc-length reparametrization.
const FIT_SAMPLES: usize = 512;
/// Retained trigonometric degree after reparametrization.
const FIT_DEGREE: usize = 160;
/// Pointwise tolerance on `|gamma| = 1` and `|gamma'| = sqrt(1-delta^2)`.
pub const CURVE_TOLERANCE: f64 = 1e-10;

impl GeneralizedCone {
    /// The circle of the exact cone, `(a cos t, a sin t, delta)`.
    pub fn exact(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let a = contraction(delta);
        Ok(GeneralizedCone {
            delta,
            curve: TrigCurve {
                c0: Vector3::new(0.0, 0.0, delta),
                cos: vec![Vector3::new(a, 0.0, 0.0)],
                sin: vec![Vector3::new(0.0, a, 0.0)],
            },
        })
    }

    /// Wraps a curve that is already on the sphere with constant speed.
    pub fn from_curve(delta: f64, curve: TrigCurve) -> Result<Self> {
        check_delta(delta)?;
        let cone = GeneralizedCone { delta, curve };
        cone.check_invariants()?;
        Ok(cone)
    }

    /// Projects `base` to the sphere and reparametrizes it by arc length.
    ///
    /// The projected curve must already have length `2 pi sqrt(1-delta^2)`.
    pub fn from_spherical_projection(delta: f64, base: &TrigCurve) -> Result<Self> {
        check_delta(delta)?;
        let a = contraction(delta);
        let length = spherical_length(base, FIT_SAMPLES);
        if (length - 2.0 * PI * a).abs() > 1e-12 * length {
            return Err(Error::InvalidParams(format!(
                "projected curve has length {length}, expected {}",
                2.0 * PI * a
            )));
        }
        let params = arc_length_samples(base, FIT_SAMPLES)?;
        let samples: Vec<_> = params.iter().map(|&t| project(base, t)[0]).collect();
        let curve = TrigCurve::fit(&samples, FIT_DEGREE);
        Self::from_curve(delta, curve)
    }

    /// Random smooth perturbation of a circle of latitude, tuned to the
    /// required length and reparametrized by arc length.
    pub fn random<R: Rng + ?Sized>(delta: f64, amplitude: f64, rng: &mut R) -> Result<Self> {
        check_delta(delta)?;
        let a = contraction(delta);
        let target = 2.0 * PI * a;
        let mut base = TrigCurve {
            c0: Vector3::zeros(),
            cos: vec![
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::zeros(),
                Vector3::zeros(),
            ],
            sin: vec![
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::zeros(),
                Vector3::zeros(),
            ],
        };
        for k in 0..3 {
            let scale = amplitude / ((k + 1) * (k + 1)) as f64;
            for c in 0..3 {
                base.cos[k][c] += scale * rng.random_range(-1.0..1.0);
                base.sin[k][c] += scale * rng.random_range(-1.0..1.0);
            }
        }
        let length_at = |z: f64, base: &mut TrigCurve| {
            base.c0.z = z;
            spherical_length(base, FIT_SAMPLES)
        };
        let (mut lo, mut hi) = (0.0, 100.0);
        if length_at(lo, &mut base) <= target || length_at(hi, &mut base) >= target {
            return Err(Error::InvalidParams(
                "perturbation too large to match the cone length".into(),
            ));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if length_at(mid, &mut base) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        base.c0.z = 0.5 * (lo + hi);
        Self::from_spherical_projection(delta, &base)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn curve(&self) -> &TrigCurve {
        &self.curve
    }

    /// Rigid rotation of the whole cone.
    pub fn rotated(&self, rot: &Matrix3<f64>) -> Self {
        GeneralizedCone {
            delta: self.delta,
            curve: self.curve.rotated(rot),
        }
    }

    /// `(gamma, gamma', gamma'')` at angle `theta`.
    pub fn gamma(&self, theta: f64) -> [Vector3<f64>; 3] {
        self.curve.eval(theta)
    }

    /// Cartesian Hessians are `(gamma + gamma'')/|x| (x) xperp (x) xperp`;
    /// returns the vector factor `gamma + gamma''` at `theta`.
    pub fn curvature_vector(&self, theta: f64) -> Vector3<f64> {
        let [g, _, g2] = self.gamma(theta);
        g + g2
    }

    /// `|D^2 y|^2` at `x`.
    pub fn hessian_norm_sq(&self, x: &Vector2<f64>) -> Result<f64> {
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::Domain {
                op: "generalized_cone_hessian",
                x: [x.x, x.y],
            });
        }
        Ok(self.curvature_vector(x.y.atan2(x.x)).norm_squared() / (r * r))
    }

    /// Maximum deviation from `|gamma| = 1` and `|gamma'| = sqrt(1-delta^2)`
    /// over `n` uniform sample angles.
    pub fn invariant_residual(&self, n: usize) -> (f64, f64) {
        let a = contraction(self.delta);
        let mut unit = 0.0f64;
        let mut speed = 0.0f64;
        for i in 0..n {
            let [g, g1, _] = self.gamma(2.0 * PI * i as f64 / n as f64);
            unit = unit.max((g.norm() - 1.0).abs());
            speed = speed.max((g1.norm() - a).abs());
        }
        (unit, speed)
    }

    fn check_invariants(&self) -> Result<()> {
        let (unit, speed) = self.invariant_residual(4 * FIT_SAMPLES);
        if unit > CURVE_TOLERANCE || speed > CURVE_TOLERANCE {
            return Err(Error::InvalidParams(format!(
                "curve violates sphere/speed constraints: |gamma|-1 = {unit:e}, speed residual = {speed:e}"
            )));
        }
        Ok(())
    }
}

/// `|x| gamma(x/|x|)`.
pub fn generalized_cone_map(x: &Vector2<f64>, cone: &GeneralizedCone) -> Result<Vector3<f64>> {
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::Domain {
            op: "generalized_cone_map",
            x: [x.x, x.y],
        });
    }
    Ok(r * cone.gamma(x.y.atan2(x.x))[0])
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

/// Unit-sphere projection of `base` and its derivative at `t`.
fn project(base: &TrigCurve, t: f64) -> [Vector3<f64>; 2] {
    let [c, c1, _] = base.eval(t);
    let n = c.norm();
    let u = c / n;
    let du = (c1 - u * u.dot(&c1)) / n;
    [u, du]
}

fn spherical_length(base: &TrigCurve, m: usize) -> f64 {
    // periodic trapezoid rule, spectrally accurate for smooth curves
    let dt = 2.0 * PI / m as f64;
    (0..m)
        .map(|i| project(base, i as f64 * dt)[1].norm())
        .sum::<f64>()
        * dt
}

/// Parameters `t_i` with arc length proportional to `2 pi i / m`.
fn arc_length_samples(base: &TrigCurve, m: usize) -> Result<Vec<f64>> {
    let mf = m as f64;
    let dt = 2.0 * PI / mf;
    let speed: Vec<f64> = (0..m)
        .map(|i| project(base, i as f64 * dt)[1].norm())
        .collect();
    let mean = speed.iter().sum::<f64>() / mf;
    if !(mean > 0.0) {
        return Err(Error::InvalidParams("degenerate curve".into()));
    }
    let kmax = m / 2 - 1;
    let mut coef = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let (mut a, mut b) = (0.0, 0.0);
        for (i, s) in speed.iter().enumerate() {
            let phase = 2.0 * PI * ((k * i) % m) as f64 / mf;
            let (sn, cs) = phase.sin_cos();
            a += s * cs;
            b += s * sn;
        }
        coef.push((a * 2.0 / mf, b * 2.0 / mf));
    }
    // normalized cumulative arc length, a map [0, 2pi] -> [0, 2pi]
    let arc = |t: f64| {
        let mut acc = mean * t;
        for (k, &(a, b)) in coef.iter().enumerate() {
            let kf = (k + 1) as f64;
            let (sn, cs) = (kf * t).sin_cos();
            acc += (a * sn + b * (1.0 - cs)) / kf;
        }
        acc / mean
    };
    let mut out = Vec::with_capacity(m);
    let mut t = 0.0;
    for i in 0..m {
        let target = i as f64 * dt;
        for _ in 0..50 {
            let f = arc(t) - target;
            let step = f / (project(base, t)[1].norm() / mean);
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        out.push(t);
    }
    Ok(out)
}

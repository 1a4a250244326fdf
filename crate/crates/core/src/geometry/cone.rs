use nalgebra::{Matrix2, Matrix3x2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::cutoff::RadialCutoff;
use crate::error::{Error, Result};

/// Deficit and thickness of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub delta: f64,
    pub h: f64,
}

impl Params {
    pub fn new(delta: f64, h: f64) -> Result<Self> {
        let p = Params { delta, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.h > 0.0 && self.h < 0.25) {
            return Err(Error::InvalidParams(format!(
                "h must lie in (0, 1/4), got {}",
                self.h
            )));
        }
        Ok(())
    }

    /// `sqrt(1 - delta^2)`, the in-plane contraction factor of the cone.
    pub fn contraction(&self) -> f64 {
        contraction(self.delta)
    }

    /// Leading-order coefficient `2 pi delta^2` of the energy scaling law.
    pub fn log_coefficient(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.delta * self.delta
    }
}

pub(crate) fn contraction(delta: f64) -> f64 {
    (1.0 - delta * delta).sqrt()
}

/// Symmetric 2x2 metric tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric2 {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl Metric2 {
    pub const IDENTITY: Metric2 = Metric2 {
        g11: 1.0,
        g12: 0.0,
        g22: 1.0,
    };

    /// Symmetric part of `m`.
    pub fn from_matrix(m: &Matrix2<f64>) -> Self {
        Metric2 {
            g11: m[(0, 0)],
            g12: 0.5 * (m[(0, 1)] + m[(1, 0)]),
            g22: m[(1, 1)],
        }
    }

    /// Gram matrix `J^T J` of a 3x2 Jacobian.
    pub fn induced(jac: &Matrix3x2<f64>) -> Self {
        let c1 = jac.column(0);
        let c2 = jac.column(1);
        Metric2 {
            g11: c1.dot(&c1),
            g12: c1.dot(&c2),
            g22: c2.dot(&c2),
        }
    }

    pub fn to_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.g11, self.g12, self.g12, self.g22)
    }

    pub fn sub(&self, other: &Metric2) -> Metric2 {
        Metric2 {
            g11: self.g11 - other.g11,
            g12: self.g12 - other.g12,
            g22: self.g22 - other.g22,
        }
    }

    /// Full Frobenius norm squared; the off-diagonal entry counts twice.
    pub fn norm_sq(&self) -> f64 {
        self.g11 * self.g11 + 2.0 * self.g12 * self.g12 + self.g22 * self.g22
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.g11 + self.g22);
        let half_diff = 0.5 * (self.g11 - self.g22);
        let rad = half_diff.hypot(self.g12);
        [mean - rad, mean + rad]
    }

    /// Contraction `A : B` with another symmetric tensor.
    pub fn contract(&self, other: &Metric2) -> f64 {
        self.g11 * other.g11 + 2.0 * self.g12 * other.g12 + self.g22 * other.g22
    }
}

/// The singular cone `sqrt(1-delta^2) x + delta |x| e3`.
pub fn cone_map(x: &Vector2<f64>, delta: f64) -> Vector3<f64> {
    let a = contraction(delta);
    Vector3::new(a * x.x, a * x.y, delta * x.norm())
}

/// Pullback metric of the cone, `Id - delta^2 xperp (x) xperp`.
pub fn reference_metric(x: &Vector2<f64>, delta: f64) -> Result<Metric2> {
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::Domain {
            op: "reference_metric",
            x: [x.x, x.y],
        });
    }
    let (px, py) = (-x.y / r, x.x / r);
    let d2 = delta * delta;
    Ok(Metric2 {
        g11: 1.0 - d2 * px * px,
        g12: -d2 * px * py,
        g22: 1.0 - d2 * py * py,
    })
}

/// Jacobian of the cone map away from the apex.
pub fn cone_jacobian(x: &Vector2<f64>, delta: f64) -> Result<Matrix3x2<f64>> {
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::Domain {
            op: "cone_jacobian",
            x: [x.x, x.y],
        });
    }
    let a = contraction(delta);
    Ok(Matrix3x2::new(
        a,
        0.0,
        0.0,
        a,
        delta * x.x / r,
        delta * x.y / r,
    ))
}

/// Cartesian Hessians of the three cone components; only the height is curved.
pub fn cone_hessians(x: &Vector2<f64>, delta: f64) -> Result<[Matrix2<f64>; 3]> {
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::Domain {
            op: "cone_hessians",
            x: [x.x, x.y],
        });
    }
    let t = Vector2::new(-x.y / r, x.x / r);
    let h3 = (delta / r) * t * t.transpose();
    Ok([Matrix2::zeros(), Matrix2::zeros(), h3])
}

/// Mollified cone `eta(|x|/h) * cone(x)`, identically zero on `B_{h/2}`.
pub fn ansatz_map<C: RadialCutoff + ?Sized>(
    x: &Vector2<f64>,
    params: &Params,
    cutoff: &C,
) -> Vector3<f64> {
    let (eta, _, _) = cutoff.eval(x.norm() / params.h);
    if eta == 0.0 {
        return Vector3::zeros();
    }
    eta * cone_map(x, params.delta)
}

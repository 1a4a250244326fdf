use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use super::cone::contraction;
use crate::error::{Error, Result};

/// Flat reference chart of the cone: the sector of opening angle
/// `2 pi sqrt(1-delta^2)`, the deficit angle and the rotation gluing the
/// two boundary rays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatChart {
    pub delta: f64,
    pub phi_delta: f64,
    pub s_delta: Matrix2<f64>,
}

pub fn rotation(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

impl FlatChart {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        let phi_delta = (1.0 - contraction(delta)) * 2.0 * PI;
        Ok(FlatChart {
            delta,
            phi_delta,
            s_delta: rotation(phi_delta),
        })
    }

    fn contraction(&self) -> f64 {
        contraction(self.delta)
    }

    /// Whether `x` lies in the flat sector `|phi(x)| < sqrt(1-delta^2) pi`.
    pub fn in_sector(&self, x: &Vector2<f64>) -> bool {
        let r = x.norm();
        r > 0.0 && r < 1.0 && (x.x / r).clamp(-1.0, 1.0).acos() < self.contraction() * PI
    }

    /// Opens the sector onto the plane by scaling the angle with `1/sqrt(1-delta^2)`.
    pub fn iota(&self, x: &Vector2<f64>) -> Result<Vector2<f64>> {
        let phi = angle_off_negative_axis(x, "iota")?;
        let (s, c) = (phi / self.contraction()).sin_cos();
        Ok(x.norm() * Vector2::new(c, s))
    }

    /// Inverse of [`iota`](Self::iota) on `B_1` minus the closed negative axis.
    pub fn iota_inverse(&self, x: &Vector2<f64>) -> Result<Vector2<f64>> {
        let phi = angle_off_negative_axis(x, "iota_inverse")?;
        let (s, c) = (phi * self.contraction()).sin_cos();
        Ok(x.norm() * Vector2::new(c, s))
    }
}

/// Angular coordinate in `(-pi, pi)`; the closed negative real axis is rejected.
fn angle_off_negative_axis(x: &Vector2<f64>, op: &'static str) -> Result<f64> {
    if x.y == 0.0 && x.x <= 0.0 {
        return Err(Error::Domain { op, x: [x.x, x.y] });
    }
    Ok(x.y.atan2(x.x))
}

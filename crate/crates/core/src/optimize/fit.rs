use serde::{Deserialize, Serialize};

use super::sweep::SweepRecord;
use crate::error::{Error, Result};

/// Least-squares fits of the energy scaling law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// `a` in `E / h^2 ~ a log(1/h) + b`.
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    /// `p` in `log E_m ~ p log h + c`.
    pub exponent: f64,
    /// `exp(c)`.
    pub prefactor: f64,
    pub membrane_residuals: Vec<f64>,
    /// `|a - 2 pi delta^2| / (2 pi delta^2)`.
    pub slope_deviation: f64,
    pub n_points: usize,
}

/// Ordinary least squares `y ~ m x + c`; returns `(m, c, residuals)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: n.min(y.len()),
        });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParams("fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let m = sxy / sxx;
    let c = my - m * mx;
    let res = x.iter().zip(y).map(|(a, b)| b - (m * a + c)).collect();
    Ok((m, c, res))
}

/// Fits `(h, total, membrane)` triples.
pub fn fit_points(points: &[(f64, f64, f64)], delta: f64) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: points.len(),
        });
    }
    if let Some(p) = points
        .iter()
        .find(|p| !(p.0 > 0.0 && p.2 > 0.0 && p.1.is_finite()))
    {
        return Err(Error::InvalidParams(format!(
            "scaling fit needs h > 0 and positive membrane energy, got {p:?}"
        )));
    }
    let x: Vec<f64> = points.iter().map(|p| (1.0 / p.0).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1 / (p.0 * p.0)).collect();
    let (slope, intercept, residuals) = linear_fit(&x, &y)?;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.2.ln()).collect();
    let (exponent, c, membrane_residuals) = linear_fit(&lx, &ly)?;
    let target = 2.0 * std::f64::consts::PI * delta * delta;
    Ok(ScalingFit {
        slope,
        intercept,
        residuals,
        exponent,
        prefactor: c.exp(),
        membrane_residuals,
        slope_deviation: (slope - target).abs() / target,
        n_points: points.len(),
    })
}

/// Fits the successful records of a sweep.
pub fn fit_scaling(records: &[SweepRecord], delta: f64) -> Result<ScalingFit> {
    let pts: Vec<(f64, f64, f64)> = records
        .iter()
        .filter(|r| r.ok())
        .map(|r| (r.h, r.total, r.membrane))
        .collect();
    fit_points(&pts, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exact_models_fit_with_zero_residual() {
        let delta: f64 = 0.5;
        let a = 2.0 * PI * delta * delta;
        let pts: Vec<_> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&h: &f64| (h, a * h * h * ((1.0 / h).ln() + 1.0), 3.0 * h * h))
            .collect();
        let f = fit_points(&pts, delta).unwrap();
        assert!((f.slope - a).abs() < 1e-12);
        assert!((f.intercept - a).abs() < 1e-12);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-12));
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!((f.prefactor - 3.0).abs() < 1e-10);
        assert!(f.slope_deviation < 1e-12);
    }

    #[test]
    fn needs_three_points() {
        let pts = [(0.1, 1.0, 1.0), (0.05, 1.0, 1.0)];
        assert!(matches!(
            fit_points(&pts, 0.5),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn fit_is_exact_on_its_model_class(a in -5.0f64..5.0, b in -5.0f64..5.0, p in 0.5f64..3.0, c in 0.1f64..10.0) {
            let pts: Vec<_> = [0.2, 0.13, 0.07, 0.03, 0.011]
                .iter()
                .map(|&h: &f64| (h, h * h * (a * (1.0 / h).ln() + b), c * h.powf(p)))
                .collect();
            let f = fit_points(&pts, 0.5).unwrap();
            proptest::prop_assert!((f.slope - a).abs() < 1e-9);
            proptest::prop_assert!((f.intercept - b).abs() < 1e-9);
            proptest::prop_assert!((f.exponent - p).abs() < 1e-9);
            proptest::prop_assert!(f.residuals.iter().chain(&f.membrane_residuals).all(|r| r.abs() < 1e-9));
        }
    }
}

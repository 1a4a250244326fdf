use serde::{Deserialize, Serialize};

/// Radial cutoff `eta` with `eta = 0` on `[0, 1/2]` and `eta = 1` on `[1, inf)`.
pub trait RadialCutoff: Send + Sync {
    /// Returns `(eta, eta', eta'')` at `t >= 0`.
    fn eval(&self, t: f64) -> (f64, f64, f64);
}

/// Quintic smoothstep on `[1/2, 1]`; C² with exact plateaus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuinticSmoothstep;

impl RadialCutoff for QuinticSmoothstep {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t <= 0.5 {
            return (0.0, 0.0, 0.0);
        }
        if t >= 1.0 {
            return (1.0, 0.0, 0.0);
        }
        let u = 2.0 * t - 1.0;
        let v = 1.0 - u;
        let eta = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
        let d1 = 30.0 * u * u * v * v;
        let d2 = 60.0 * u * v * (1.0 - 2.0 * u);
        // du/dt = 2
        (eta, 2.0 * d1, 4.0 * d2)
    }
}

/// Septic smoothstep on `[1/2, 1]`; C³ with exact plateaus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SepticSmoothstep;

impl RadialCutoff for SepticSmoothstep {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t <= 0.5 {
            return (0.0, 0.0, 0.0);
        }
        if t >= 1.0 {
            return (1.0, 0.0, 0.0);
        }
        let u = 2.0 * t - 1.0;
        let v = 1.0 - u;
        let u4 = u * u * u * u;
        let eta = u4 * (35.0 - 84.0 * u + 70.0 * u * u - 20.0 * u * u * u);
        let d1 = 140.0 * u * u * u * v * v * v;
        let d2 = 420.0 * u * u * v * v * (1.0 - 2.0 * u);
        (eta, 2.0 * d1, 4.0 * d2)
    }
}

/// Named cutoff choice for configuration files.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cutoff {
    Quintic,
    /// Default: its continuous third derivative keeps the high-order radial
    /// stencils accurate across the plateau edges.
    #[default]
    Septic,
}

impl RadialCutoff for Cutoff {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        match self {
            Cutoff::Quintic => QuinticSmoothstep.eval(t),
            Cutoff::Septic => SepticSmoothstep.eval(t),
        }
    }
}

/// Cutoff given by plain closures, for experiments with other profiles.
pub struct FnCutoff<F>(pub F);

impl<F> RadialCutoff for FnCutoff<F>
where
    F: Fn(f64) -> (f64, f64, f64) + Send + Sync,
{
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        (self.0)(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus_and_midpoint() {
        let c = QuinticSmoothstep;
        assert_eq!(c.eval(0.25), (0.0, 0.0, 0.0));
        assert_eq!(c.eval(0.5), (0.0, 0.0, 0.0));
        assert_eq!(c.eval(2.0), (1.0, 0.0, 0.0));
        let (e, d1, d2) = c.eval(0.75);
        assert!((e - 0.5).abs() < 1e-15);
        assert!((d1 - 3.75).abs() < 1e-14);
        assert!(d2.abs() < 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = QuinticSmoothstep;
        let eps = 1e-6;
        for k in 1..50 {
            let t = 0.5 + 0.5 * k as f64 / 50.0;
            let (_, d1, d2) = c.eval(t);
            let fd1 = (c.eval(t + eps).0 - c.eval(t - eps).0) / (2.0 * eps);
            let fd2 = (c.eval(t + eps).1 - c.eval(t - eps).1) / (2.0 * eps);
            assert!((d1 - fd1).abs() < 1e-7, "t={t}");
            assert!((d2 - fd2).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn derivative_bounds() {
        let c = QuinticSmoothstep;
        let (mut m1, mut m2) = (0.0f64, 0.0f64);
        for k in 0..=10_000 {
            let (_, d1, d2) = c.eval(k as f64 / 5000.0);
            m1 = m1.max(d1.abs());
            m2 = m2.max(d2.abs());
        }
        // Max of 30 u^2 (1-u)^2 is 15/8 at u = 1/2; 60 u (1-u)(1-2u) peaks at 10/sqrt(3).
        assert!((m1 - 3.75).abs() < 1e-9);
        assert!((m2 - 40.0 / 3f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn septic_is_c3() {
        let c = SepticSmoothstep;
        let (e, d1, d2) = c.eval(0.75);
        assert!((e - 0.5).abs() < 1e-15);
        assert!((d1 - 4.375).abs() < 1e-14);
        assert!(d2.abs() < 1e-13);
        let eps = 1e-6;
        for k in 1..50 {
            let t = 0.5 + 0.5 * k as f64 / 50.0;
            let (_, d1, d2) = c.eval(t);
            assert!((d1 - (c.eval(t + eps).0 - c.eval(t - eps).0) / (2.0 * eps)).abs() < 1e-7);
            assert!((d2 - (c.eval(t + eps).1 - c.eval(t - eps).1) / (2.0 * eps)).abs() < 1e-6);
        }
        // third derivative vanishes at both plateau edges
        for t in [0.5, 1.0] {
            let slope = (c.eval(t + 1e-6).2 - c.eval(t - 1e-6).2) / 2e-6;
            assert!(slope.abs() < 1e-2, "t={t}: {slope}");
        }
        assert_eq!(Cutoff::default().eval(0.8), c.eval(0.8));
        assert_eq!(Cutoff::Quintic.eval(0.8), QuinticSmoothstep.eval(0.8));
    }
}

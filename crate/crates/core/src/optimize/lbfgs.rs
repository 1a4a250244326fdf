use std::collections::VecDeque;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::line_search::{strong_wolfe, Outcome, Probe, WolfeParams};
use super::precond::FourierPreconditioner;
use crate::energy::Objective;
use crate::error::{Error, Result};
use crate::geometry::Params;
use crate::mesh::DeformationField;

type V3 = Vector3<f64>;

/// Mass shift of the preconditioner, in units of `h^2`. It only has to make
/// the rigid motions invertible.
const PRECONDITIONER_SHIFT: f64 = 1e-3;

/// Relative energy decrease below which progress counts as stalled.
const STAGNATION_TOL: f64 = 1e-12;

/// Settings of the preconditioned L-BFGS minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_iterations: usize,
    /// Stop once `max |grad| < grad_tol * h^2`.
    pub grad_tol: f64,
    /// Stop once the energy decreased by less than `1e-12` (relative) over
    /// this many iterations.
    pub stagnation_window: usize,
    /// Function evaluations allowed per line search.
    pub max_line_search: usize,
    /// Iterations between rebuilds of the preconditioner.
    pub refresh_interval: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            memory: 10,
            c1: 1e-4,
            c2: 0.9,
            max_iterations: 20_000,
            grad_tol: 1e-7,
            stagnation_window: 50,
            max_line_search: 30,
            refresh_interval: 50,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "Wolfe constants must satisfy 0 < c1 < c2 < 1, got c1={}, c2={}",
                self.c1, self.c2
            )));
        }
        if self.memory == 0 {
            return Err(Error::InvalidConfig("memory must be at least 1".into()));
        }
        if !(self.grad_tol >= 0.0 && self.grad_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "invalid grad_tol {}",
                self.grad_tol
            )));
        }
        if self.stagnation_window == 0 || self.max_line_search < 2 || self.refresh_interval == 0 {
            return Err(Error::InvalidConfig(
                "stagnation_window and refresh_interval must be >= 1, max_line_search >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Why the minimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    Stagnated,
    MaxIterations,
    LineSearchFailed,
}

/// Result of [`minimize`].
#[derive(Debug, Clone)]
pub struct Minimized {
    pub field: DeformationField,
    /// Energy after each accepted step; `trace[0]` is the initial energy.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// `max |grad|` at the returned field.
    pub grad_norm: f64,
    pub termination: Termination,
}

impl Minimized {
    pub fn energy(&self) -> f64 {
        *self.trace.last().expect("trace holds the initial energy")
    }
}

fn dot(a: &[V3], b: &[V3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn max_norm(a: &[V3]) -> f64 {
    a.iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |m, c| m.max(c.abs()))
}

struct Pair {
    s: Vec<V3>,
    y: Vec<V3>,
    rho: f64,
}

/// Two-loop recursion with initial matrix `gamma P^-1`.
fn direction(
    grad: &[V3],
    pairs: &VecDeque<Pair>,
    pre: &FourierPreconditioner,
    gamma: f64,
) -> Vec<V3> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for p in pairs.iter().rev() {
        let a = p.rho * dot(&p.s, &q);
        for (qi, yi) in q.iter_mut().zip(&p.y) {
            *qi -= yi * a;
        }
        alphas.push(a);
    }
    let mut q = pre.apply(&q);
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for (p, a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = p.rho * dot(&p.y, &q);
        for (qi, si) in q.iter_mut().zip(&p.s) {
            *qi += si * (a - b);
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

/// Minimizes the discrete energy from `initial` with preconditioned
/// L-BFGS and a strong-Wolfe line search.
pub fn minimize(
    initial: &DeformationField,
    params: &Params,
    config: &OptimizerConfig,
) -> Result<Minimized> {
    config.validate()?;
    params.validate()?;
    let mesh = initial.mesh().clone();
    if mesh.params() != params {
        return Err(Error::MeshMismatch(
            "field mesh was built for different params".into(),
        ));
    }
    let objective = Objective::new(mesh.clone());
    let n = mesh.len();
    let tol = config.grad_tol * params.h * params.h;
    let shift = PRECONDITIONER_SHIFT * params.h * params.h;

    let mut x = initial.values().to_vec();
    let mut grad = vec![V3::zeros(); n];
    let mut f = objective.evaluate(&x, Some(&mut grad)).2;
    if !f.is_finite() {
        return Err(Error::NonFinite("initial energy".into()));
    }
    let mut pre = FourierPreconditioner::new(&objective, &mesh, &x, shift);
    let mut built_at = 0;
    let mut trace = vec![f];
    let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(config.memory);
    let mut gamma = 1.0;
    let wolfe = WolfeParams {
        c1: config.c1,
        c2: config.c2,
        max_evals: config.max_line_search,
    };
    let mut trial = vec![V3::zeros(); n];
    let mut trial_grad = vec![V3::zeros(); n];
    let mut iterations = 0;
    let mut failures = 0;

    let termination = loop {
        if max_norm(&grad) < tol {
            break Termination::Converged;
        }
        if iterations >= config.max_iterations {
            break Termination::MaxIterations;
        }
        let w = config.stagnation_window;
        if trace.len() > w {
            let old = trace[trace.len() - 1 - w];
            if (old - f) <= STAGNATION_TOL * f.abs() {
                break Termination::Stagnated;
            }
        }
        let mut d = direction(&grad, &pairs, &pre, gamma);
        let mut g0 = dot(&grad, &d);
        if !(g0 < 0.0) {
            pairs.clear();
            gamma = 1.0;
            d = direction(&grad, &pairs, &pre, gamma);
            g0 = dot(&grad, &d);
        }
        let mut non_finite = false;
        let mut last_alpha = f64::NAN;
        let outcome = strong_wolfe(
            |alpha| {
                for ((t, xi), di) in trial.iter_mut().zip(&x).zip(&d) {
                    *t = xi + di * alpha;
                }
                let value = objective.evaluate(&trial, Some(&mut trial_grad)).2;
                non_finite |= !value.is_finite();
                last_alpha = alpha;
                Probe {
                    alpha,
                    value,
                    slope: dot(&trial_grad, &d),
                }
            },
            f,
            g0,
            1.0,
            &wolfe,
        );
        let step = match outcome {
            Outcome::Accepted(p) => {
                failures = 0;
                p
            }
            // the predicted decrease is already below the stagnation level
            Outcome::Failed(_) if -g0 <= STAGNATION_TOL * f.abs() => break Termination::Stagnated,
            Outcome::Failed(best) => {
                failures += 1;
                pairs.clear();
                gamma = 1.0;
                if built_at != iterations {
                    pre = FourierPreconditioner::new(&objective, &mesh, &x, shift);
                    built_at = iterations;
                }
                match best {
                    Some(p) => p,
                    None if non_finite => {
                        return Err(Error::NonFinite(format!(
                            "energy along the search direction at iteration {iterations}"
                        )))
                    }
                    None if failures < 2 => continue,
                    None => break Termination::LineSearchFailed,
                }
            }
        };
        let s: Vec<V3> = d.iter().map(|di| di * step.alpha).collect();
        if step.alpha != last_alpha {
            for ((t, xi), si) in trial.iter_mut().zip(&x).zip(&s) {
                *t = xi + si;
            }
            objective.evaluate(&trial, Some(&mut trial_grad));
        }
        let f_new = step.value;
        let y: Vec<V3> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            let py = dot(&y, &pre.apply(&y));
            if py > 0.0 {
                gamma = sy / py;
            }
            if pairs.len() == config.memory {
                pairs.pop_front();
            }
            pairs.push_back(Pair {
                s,
                y,
                rho: 1.0 / sy,
            });
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        f = f_new;
        trace.push(f);
        iterations += 1;
        if iterations - built_at >= config.refresh_interval {
            pre = FourierPreconditioner::new(&objective, &mesh, &x, shift);
            built_at = iterations;
        }
        if failures >= 3 {
            break Termination::LineSearchFailed;
        }
    };
    let grad_norm = max_norm(&grad);
    Ok(Minimized {
        field: DeformationField::new(mesh, x)?,
        trace,
        iterations,
        grad_norm,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy_gradient;
    use crate::geometry::{ansatz_map, QuinticSmoothstep};
    use crate::mesh::{build_mesh, sample_with};
    use std::sync::Arc;

    fn ansatz(p: &Params, n: usize) -> DeformationField {
        let m = Arc::new(build_mesh(p, n, n).unwrap());
        sample_with(m, |x| ansatz_map(x, p, &QuinticSmoothstep)).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        let bad = OptimizerConfig {
            c1: 0.95,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig {
            memory: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn decreases_energy_monotonically() {
        let p = Params::new(0.5, 0.1).unwrap();
        let init = ansatz(&p, 24);
        let cfg = OptimizerConfig {
            max_iterations: 300,
            ..Default::default()
        };
        let out = minimize(&init, &p, &cfg).unwrap();
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.energy() < 0.5 * out.trace[0]);
        assert_eq!(out.trace.len(), out.iterations + 1);
    }

    #[test]
    fn stops_at_a_stationary_point() {
        let p = Params::new(0.5, 0.2).unwrap();
        let init = ansatz(&p, 24);
        let cfg = OptimizerConfig::default();
        let out = minimize(&init, &p, &cfg).unwrap();
        assert!(
            matches!(
                out.termination,
                Termination::Converged | Termination::Stagnated
            ),
            "{:?}",
            out.termination
        );
        let g = energy_gradient(&out.field, &p).unwrap();
        assert_eq!(max_norm(&g), out.grad_norm);
        // a second run cannot find a meaningful decrease
        let again = minimize(&out.field, &p, &cfg).unwrap();
        assert!(out.energy() - again.energy() <= 1e-10 * out.energy());
        // below the gradient tolerance the input is returned untouched
        let loose = OptimizerConfig {
            grad_tol: 2.0 * out.grad_norm / (p.h * p.h),
            ..cfg
        };
        let idle = minimize(&out.field, &p, &loose).unwrap();
        assert_eq!(idle.iterations, 0);
        assert_eq!(idle.termination, Termination::Converged);
        assert_eq!(idle.field, out.field);
    }

    #[test]
    fn minimization_is_frame_indifferent() {
        use nalgebra::{Matrix3, Rotation3, Unit};
        let p = Params::new(0.5, 0.1).unwrap();
        let init = ansatz(&p, 32);
        let cfg = OptimizerConfig::default();
        let base = minimize(&init, &p, &cfg).unwrap();
        let axis = Unit::new_normalize(V3::new(0.3, -1.0, 0.4));
        let flip = Matrix3::from_diagonal(&V3::new(1.0, -1.0, 1.0));
        let rot = Rotation3::from_axis_angle(&axis, 1.1).into_inner() * flip;
        let moved = init.transformed(&rot, &V3::new(0.5, 2.0, -1.0));
        let out = minimize(&moved, &p, &cfg).unwrap();
        let rel = (out.energy() - base.energy()).abs() / base.energy();
        assert!(rel < 1e-8, "{rel:e}");
    }

    #[test]
    fn returns_to_the_minimum_after_smooth_perturbation() {
        let p = Params::new(0.5, 0.1).unwrap();
        let init = ansatz(&p, 32);
        let cfg = OptimizerConfig::default();
        let base = minimize(&init, &p, &cfg).unwrap();
        let m = init.mesh().clone();
        let bumped: Vec<V3> = init
            .values()
            .iter()
            .zip(m.points())
            .map(|(y, x)| {
                y + V3::new(
                    (3.0 * x.x).sin(),
                    (2.0 * x.y).cos(),
                    (x.x * x.y * 5.0).sin(),
                ) * 1e-2
            })
            .collect();
        let bumped = DeformationField::new(m, bumped).unwrap();
        let out = minimize(&bumped, &p, &cfg).unwrap();
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!((out.energy() - base.energy()).abs() < 0.01 * base.energy());
    }
}

//! Strong-Wolfe line search (bracketing and zoom with cubic interpolation).

/// Function value and directional derivative at a trial step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Probe {
    pub alpha: f64,
    pub value: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Outcome {
    /// Step satisfying both strong-Wolfe conditions.
    Accepted(Probe),
    /// No acceptable step; carries the lowest-value probe seen, if it
    /// decreased the function.
    Failed(Option<Probe>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct WolfeParams {
    pub c1: f64,
    pub c2: f64,
    pub max_evals: usize,
}

/// Minimizer of the cubic interpolating two probes, safeguarded to the
/// interior of `[lo, hi]`.
fn cubic_min(a: &Probe, b: &Probe) -> f64 {
    let (lo, hi) = if a.alpha < b.alpha {
        (a.alpha, b.alpha)
    } else {
        (b.alpha, a.alpha)
    };
    let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    let mid = 0.5 * (lo + hi);
    if !(disc >= 0.0) {
        return mid;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        mid
    }
}

/// Searches along a descent direction. `eval(alpha)` returns the value and
/// directional derivative there; `f0`, `g0` are those at `alpha = 0`.
pub(crate) fn strong_wolfe<F>(
    mut eval: F,
    f0: f64,
    g0: f64,
    alpha0: f64,
    p: &WolfeParams,
) -> Outcome
where
    F: FnMut(f64) -> Probe,
{
    debug_assert!(g0 < 0.0);
    let origin = Probe {
        alpha: 0.0,
        value: f0,
        slope: g0,
    };
    let mut best: Option<Probe> = None;
    let note = |t: &Probe, best: &mut Option<Probe>| {
        if t.value.is_finite() && t.value < f0 && best.is_none_or(|b| t.value < b.value) {
            *best = Some(*t);
        }
    };
    let armijo = |t: &Probe| t.value <= f0 + p.c1 * t.alpha * g0;
    let curvature = |t: &Probe| t.slope.abs() <= -p.c2 * g0;

    let mut prev = origin;
    let mut alpha = alpha0;
    let mut evals = 0;
    let (mut lo, mut hi);
    loop {
        let t = eval(alpha);
        evals += 1;
        note(&t, &mut best);
        if !t.value.is_finite() {
            // overshoot into an invalid region: shrink
            if evals >= p.max_evals {
                return Outcome::Failed(best);
            }
            alpha = 0.5 * (prev.alpha + alpha);
            continue;
        }
        if !armijo(&t) || (evals > 1 && t.value >= prev.value) {
            lo = prev;
            hi = t;
            break;
        }
        if curvature(&t) {
            return Outcome::Accepted(t);
        }
        if t.slope >= 0.0 {
            lo = t;
            hi = prev;
            break;
        }
        if evals >= p.max_evals {
            return Outcome::Failed(best);
        }
        prev = t;
        alpha *= 4.0;
    }
    // zoom: `lo` satisfies Armijo with the lowest value so far, and the
    // interval between `lo` and `hi` contains acceptable steps
    while evals < p.max_evals {
        let a = cubic_min(&lo, &hi);
        if (hi.alpha - lo.alpha).abs() <= 1e-16 * lo.alpha.abs().max(1e-300) {
            break;
        }
        let t = eval(a);
        evals += 1;
        note(&t, &mut best);
        if !t.value.is_finite() || !armijo(&t) || t.value >= lo.value {
            hi = t;
            if !t.value.is_finite() {
                hi.value = f64::INFINITY;
                hi.slope = f64::INFINITY;
            }
        } else {
            if curvature(&t) {
                return Outcome::Accepted(t);
            }
            if t.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = t;
        }
    }
    Outcome::Failed(best)
}

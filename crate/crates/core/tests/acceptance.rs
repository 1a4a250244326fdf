//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Matrix3, Rotation3, Unit, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use conesheet::diagnostics::{hessian_det_integral, isoper_check, pair_weak_form, TestFunctionPhi};
use conesheet::energy::{bending_profile, energy_breakdown, energy_gradient};
use conesheet::geometry::{cone_map, generalized_cone_map, GeneralizedCone};
use conesheet::mesh::{
    build_mesh, compute_jets, integrate_ring, sample_field, sample_with, ScalarField,
};
use conesheet::optimize::{
    ansatz_field, fit_points, procrustes_align, sweep, w22_distance, MeshConfig, SweepConfig,
    SweepResult,
};
use conesheet::{DeformationField, Params, PolarMesh};

type V3 = Vector3<f64>;

const DELTA: f64 = 0.5;
const HS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
const N: usize = 256;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn target_slope() -> f64 {
    2.0 * PI * DELTA * DELTA
}

fn mesh_config() -> MeshConfig {
    MeshConfig {
        n_radial: N,
        n_angular: N,
        ..Default::default()
    }
}

fn params(h: f64) -> Params {
    Params::new(DELTA, h).unwrap()
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn random_orthogonal(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let axis = Unit::new_normalize(V3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ));
    let r = Rotation3::from_axis_angle(&axis, rng.random_range(0.0..PI)).into_inner();
    if rng.random_bool(0.5) {
        -r
    } else {
        r
    }
}

fn c1_ansatz_slope() -> Verdict {
    let t = Instant::now();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for h in HS {
        let f = ansatz_field(&params(h), &mesh_config()).unwrap();
        let e = energy_breakdown(&f, &params(h)).unwrap().total;
        x.push((1.0 / h).ln());
        y.push(e / (h * h));
    }
    let a = slope(&x, &y);
    let dev = (a - target_slope()).abs() / target_slope();
    let secs = t.elapsed().as_secs_f64();
    verdict(
        dev < 0.03 && secs < 60.0,
        format!(
            "slope {a:.4} vs {:.4} (deviation {:.2}%), {secs:.1}s",
            target_slope(),
            100.0 * dev
        ),
    )
}

fn c2_gate(s: &SweepResult, secs: f64) -> Verdict {
    let mut ok = s
        .records
        .iter()
        .all(|r| r.ok() && r.total <= r.ansatz_total);
    let consts: Vec<f64> = s
        .records
        .iter()
        .map(|r| r.total / (r.h * r.h) - target_slope() * (1.0 / r.h).ln())
        .collect();
    let lo = consts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = consts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ok &= hi - lo <= 25.0 && secs <= 1800.0;
    let rows: Vec<String> = s
        .records
        .iter()
        .zip(&consts)
        .map(|(r, c)| {
            format!(
                "h={} E={:.6e} ansatz={:.6e} c={c:.3} iters={}",
                r.h, r.total, r.ansatz_total, r.iters
            )
        })
        .collect();
    verdict(
        ok,
        format!("band width {:.3}; {}; {secs:.1}s", hi - lo, rows.join("; ")),
    )
}

fn c3_membrane(s: &SweepResult) -> Verdict {
    let pts: Vec<(f64, f64, f64)> = s
        .records
        .iter()
        .map(|r| (r.h, r.total, r.membrane))
        .collect();
    let fit = fit_points(&pts, DELTA).unwrap();
    verdict(
        (1.7..=2.3).contains(&fit.exponent),
        format!(
            "exponent p = {:.3}, prefactor {:.3}",
            fit.exponent, fit.prefactor
        ),
    )
}

fn finest(s: &SweepResult) -> &DeformationField {
    let k = s.records.iter().position(|r| r.h == 0.025).unwrap();
    s.fields[k].as_ref().unwrap()
}

fn c4_bending_profile(s: &SweepResult) -> Verdict {
    let radii: Vec<f64> = (0..=16).map(|k| 0.1 + 0.4 * k as f64 / 16.0).collect();
    let prof = bending_profile(finest(s), &radii).unwrap();
    let res: Vec<f64> = prof
        .iter()
        .zip(&radii)
        .map(|(b, r)| b - target_slope() * (1.0 / r).ln())
        .collect();
    let lo = res.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = res.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    verdict(
        hi - lo <= 2.0,
        format!(
            "residual range [{lo:.4}, {hi:.4}], variation {:.4}",
            hi - lo
        ),
    )
}

fn c5_concentration(s: &SweepResult) -> Verdict {
    let jets = compute_jets(finest(s)).unwrap();
    let target = PI * DELTA * DELTA;
    let worst = (0..=24)
        .map(|k| 0.2 + 0.6 * k as f64 / 24.0)
        .map(|r| (hessian_det_integral(&jets, r).unwrap() - target).abs() / target)
        .fold(0.0, f64::max);
    verdict(
        worst <= 0.1,
        format!("max relative deviation from pi delta^2: {:.4}", worst),
    )
}

/// Graph of a random sum of plane waves.
fn trig_graph(m: &Arc<PolarMesh>, seed: u64) -> DeformationField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(Vector2<f64>, f64, f64)> = (0..4)
        .map(|_| {
            (
                Vector2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
                rng.random_range(-0.5..0.5),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    sample_with(m.clone(), |x| {
        let z: f64 = modes
            .iter()
            .map(|(k, a, ph)| a * (k.dot(x) + ph).cos())
            .sum();
        V3::new(x.x, x.y, z)
    })
    .unwrap()
}

fn c6_weak_form() -> Verdict {
    let p = params(0.05);
    let phi = TestFunctionPhi::new(0.075, 0.7).unwrap();
    let coarse = Arc::new(build_mesh(&p, N / 2, N / 2).unwrap());
    let fine = Arc::new(build_mesh(&p, N, N).unwrap());
    let mut worst = 0.0f64;
    let (mut e_coarse, mut e_fine) = (0.0, 0.0);
    for seed in 0..20 {
        let w = pair_weak_form(&trig_graph(&fine, seed), &p, &phi).unwrap();
        let wc = pair_weak_form(&trig_graph(&coarse, seed), &p, &phi).unwrap();
        worst = worst.max(w.relative_error());
        e_fine += (w.lhs - w.rhs).abs();
        e_coarse += (wc.lhs - wc.rhs).abs();
    }
    let order = (e_coarse / e_fine).log2();
    verdict(
        worst < 1e-4 && order >= 1.5,
        format!("max relative error {worst:.2e}, observed order {order:.2}"),
    )
}

/// All monomials `x^a y^b` with `a + b <= 4`.
fn quartic(c: &[f64], x: &Vector2<f64>) -> f64 {
    let mut k = 0;
    let mut acc = 0.0;
    for deg in 0..=4 {
        for a in 0..=deg {
            acc += c[k] * x.x.powi(a) * x.y.powi(deg - a);
            k += 1;
        }
    }
    acc
}

fn c7_isoperimetric() -> Verdict {
    let p = params(0.05);
    let m = Arc::new(build_mesh(&p, 128, 128).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..1000 {
        let c: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v = ScalarField::sample(m.clone(), |x| quartic(&c, x));
        for r in [0.25, 0.5, 0.75] {
            let k = isoper_check(&v, r).unwrap();
            if k.lhs_tangential < k.rhs - 1e-3 * (1.0 + k.rhs) {
                violations += 1;
            }
            tightest = tightest.min(k.lhs_tangential - k.rhs);
        }
    }
    let bowl = ScalarField::sample(m.clone(), |x| 0.5 * x.norm_squared());
    let eq = isoper_check(&bowl, 0.5).unwrap();
    let ratio = eq.lhs_tangential / eq.rhs;
    verdict(
        violations == 0 && (ratio - 1.0).abs() < 0.01,
        format!("{violations} violations in 3000 checks (min slack {tightest:.3e}); bowl lhs/rhs = {ratio:.6}"),
    )
}

fn c8_gradient() -> Verdict {
    let p = params(0.1);
    let m = Arc::new(build_mesh(&p, 32, 32).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let base = ansatz_field(
            &p,
            &MeshConfig {
                n_radial: 32,
                n_angular: 32,
                ..Default::default()
            },
        )
        .unwrap();
        let vals: Vec<V3> = base
            .values()
            .iter()
            .map(|y| {
                y + V3::new(
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.05..0.05),
                )
            })
            .collect();
        let f = DeformationField::new(m.clone(), vals).unwrap();
        let dir: Vec<V3> = (0..m.len())
            .map(|_| {
                V3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let g = energy_gradient(&f, &p).unwrap();
        let analytic: f64 = g.iter().zip(&dir).map(|(a, b)| a.dot(b)).sum();
        let eps = 1e-6;
        let energy_at = |s: f64| {
            let v: Vec<V3> = f
                .values()
                .iter()
                .zip(&dir)
                .map(|(y, d)| y + d * s)
                .collect();
            energy_breakdown(&DeformationField::new(m.clone(), v).unwrap(), &p)
                .unwrap()
                .total
        };
        let fd = (energy_at(eps) - energy_at(-eps)) / (2.0 * eps);
        worst = worst.max((analytic - fd).abs() / analytic.abs());
    }
    verdict(
        worst < 1e-6,
        format!("max relative error {worst:.2e} over 20 pairs"),
    )
}

fn c9_generalized_cone() -> Verdict {
    let p = params(0.05);
    let m = Arc::new(build_mesh(&p, N, N).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rhos = [0.25, 0.5, 0.75];
    let (mut discrete, mut analytic) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let cone = GeneralizedCone::random(DELTA, 0.15, &mut rng).unwrap();
        let field = sample_field(|x| generalized_cone_map(x, &cone), m.clone()).unwrap();
        let jets = compute_jets(&field).unwrap();
        let dens: Vec<f64> = jets.nodes().iter().map(|n| n.hessian_norm_sq()).collect();
        let d: Vec<f64> = rhos
            .iter()
            .map(|&r| integrate_ring(&dens, &m, r).unwrap() * r)
            .collect();
        let a: Vec<f64> = rhos
            .iter()
            .map(|&r| {
                let n = 2048;
                let s: f64 = (0..n)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / n as f64;
                        cone.hessian_norm_sq(&Vector2::new(r * t.cos(), r * t.sin()))
                            .unwrap()
                    })
                    .sum();
                s * r * (2.0 * PI / n as f64) * r
            })
            .collect();
        let spread = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (hi - lo) / lo
        };
        discrete = discrete.max(spread(&d));
        analytic = analytic.max(spread(&a));
    }
    verdict(
        discrete < 0.01 && analytic < 1e-13,
        format!("max relative spread: discrete {discrete:.2e}, analytic {analytic:.2e}"),
    )
}

fn c10_convergence_proxy(s: &SweepResult) -> Verdict {
    let dists: Vec<(f64, f64)> = s
        .records
        .iter()
        .zip(&s.fields)
        .map(|(r, f)| {
            let f = f.as_ref().unwrap();
            let p = params(r.h);
            let al = procrustes_align(f, &p, 0.3).unwrap();
            let cone = sample_with(f.mesh().clone(), |x| cone_map(x, DELTA)).unwrap();
            (r.h, w22_distance(&al.aligned, &cone, 0.3).unwrap())
        })
        .collect();
    let ok = dists.windows(2).all(|w| w[1].1 <= 1.1 * w[0].1);
    let rows: Vec<String> = dists
        .iter()
        .map(|(h, d)| format!("h={h}: {d:.4e}"))
        .collect();
    verdict(ok, rows.join(", "))
}

fn c11_frame_indifference() -> Verdict {
    let p = params(0.1);
    let f = ansatz_field(&p, &mesh_config()).unwrap();
    let base = energy_breakdown(&f, &p).unwrap().total;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let rot = random_orthogonal(&mut rng);
        let b = V3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        );
        let e = energy_breakdown(&f.transformed(&rot, &b), &p)
            .unwrap()
            .total;
        worst = worst.max((e - base).abs() / base);
    }
    verdict(
        worst < 1e-12,
        format!("max relative energy change {worst:.2e}"),
    )
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let t = Instant::now();
    let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        verdict(false, format!("panicked: {msg}"))
    });
    println!(
        "[{}] {id:>2} {name}: {} ({:.1}s)",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        t.elapsed().as_secs_f64()
    );
    v.pass
}

fn main() {
    let mut passed = Vec::new();
    passed.push(run(1, "ansatz scaling slope", c1_ansatz_slope));

    let t = Instant::now();
    let list: Vec<Params> = HS.iter().map(|&h| params(h)).collect();
    let cfg = SweepConfig {
        mesh: mesh_config(),
        ..Default::default()
    };
    let swept = catch_unwind(|| sweep(&list, &cfg));
    let secs = t.elapsed().as_secs_f64();
    match swept {
        Ok(Ok(s)) if s.records.iter().all(|r| r.ok()) => {
            passed.push(run(2, "minimizer gate", || c2_gate(&s, secs)));
            passed.push(run(3, "membrane scaling", || c3_membrane(&s)));
            passed.push(run(4, "bending profile", || c4_bending_profile(&s)));
            passed.push(run(5, "curvature concentration", || c5_concentration(&s)));
            passed.push(run(6, "weak-form identity", c6_weak_form));
            passed.push(run(7, "isoperimetric suite", c7_isoperimetric));
            passed.push(run(8, "gradient correctness", c8_gradient));
            passed.push(run(9, "generalized-cone ring scaling", c9_generalized_cone));
            passed.push(run(10, "convergence proxy", || c10_convergence_proxy(&s)));
        }
        other => {
            let why = match other {
                Ok(Ok(s)) => format!(
                    "{:?}",
                    s.records
                        .iter()
                        .filter_map(|r| r.error.clone())
                        .collect::<Vec<_>>()
                ),
                Ok(Err(e)) => e.to_string(),
                Err(_) => "sweep panicked".into(),
            };
            for (id, name) in [
                (2, "minimizer gate"),
                (3, "membrane scaling"),
                (4, "bending profile"),
                (5, "curvature concentration"),
                (10, "convergence proxy"),
            ] {
                passed.push(run(id, name, || {
                    verdict(false, format!("sweep failed: {why}"))
                }));
            }
            passed.push(run(6, "weak-form identity", c6_weak_form));
            passed.push(run(7, "isoperimetric suite", c7_isoperimetric));
            passed.push(run(8, "gradient correctness", c8_gradient));
            passed.push(run(9, "generalized-cone ring scaling", c9_generalized_cone));
        }
    }
    passed.push(run(11, "frame indifference", c11_frame_indifference));

    let n_pass = passed.iter().filter(|p| **p).count();
    println!("acceptance: {n_pass}/{} criteria passed", passed.len());
    if n_pass != passed.len() {
        std::process::exit(1);
    }
}

//! Finite-difference weights on the polar grid.

/// Fornberg's recursion: weights `w[k][j]` so that `sum_j w[k][j] f(x_j)`
/// approximates the `k`-th derivative at `x0`, for `k <= max_order`.
pub fn fornberg(x0: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut w = vec![vec![0.0; n]; max_order + 1];
    w[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[k][i] = c1 * (k as f64 * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                w[k][j] = (c4 * w[k][j] - k as f64 * w[k - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    w
}

/// Up to eight-point radial stencil starting at ring `start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub start: usize,
    pub len: usize,
    pub w: [f64; 8],
}

impl Stencil {
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |k| (self.start + k, self.w[k]))
    }
}

/// First- and second-derivative stencils in `r` for one ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialStencils {
    pub d1: Stencil,
    pub d2: Stencil,
}

/// Sixth-order polynomial stencils in `r`: centered seven-point in the
/// interior, one-sided seven-point (first) and eight-point (second
/// derivative) on the three rings nearest each boundary.
pub fn radial_stencils(radii: &[f64]) -> Vec<RadialStencils> {
    let n = radii.len();
    assert!(n >= 8, "radial stencils need at least six rings");
    let build = |i: usize, start: usize, len: usize, order: usize| {
        let wts = fornberg(radii[i], &radii[start..start + len], order);
        let mut w = [0.0; 8];
        w[..len].copy_from_slice(&wts[order]);
        Stencil { start, len, w }
    };
    (0..n)
        .map(|i| {
            if i < 3 {
                RadialStencils {
                    d1: build(i, 0, 7, 1),
                    d2: build(i, 0, 8, 2),
                }
            } else if i + 3 >= n {
                RadialStencils {
                    d1: build(i, n - 7, 7, 1),
                    d2: build(i, n - 8, 8, 2),
                }
            } else {
                RadialStencils {
                    d1: build(i, i - 3, 7, 1),
                    d2: build(i, i - 3, 7, 2),
                }
            }
        })
        .collect()
}

/// Transposed radial stencils: for each ring `k`, the rings `i` whose
/// stencil reads ring `k`, with the weight used.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transposed {
    pub d1: Vec<Vec<(usize, f64)>>,
    pub d2: Vec<Vec<(usize, f64)>>,
}

pub fn transpose(stencils: &[RadialStencils]) -> Transposed {
    let n = stencils.len();
    let mut t = Transposed {
        d1: vec![Vec::new(); n],
        d2: vec![Vec::new(); n],
    };
    for (i, s) in stencils.iter().enumerate() {
        for (k, w) in s.d1.entries() {
            t.d1[k].push((i, w));
        }
        for (k, w) in s.d2.entries() {
            t.d2[k].push((i, w));
        }
    }
    t
}

/// Periodic angular stencil coefficients, fitted to be exact on
/// `{1, cos, sin}`: `f' ~ c1 (f+ - f-)`, `f'' ~ c2 (f+ - 2 f + f-)`.
pub fn angular_coefficients(dtheta: f64) -> (f64, f64) {
    let half = (0.5 * dtheta).sin();
    (0.5 / dtheta.sin(), 0.25 / (half * half))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_matches_textbook_weights() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
        let w = fornberg(0.0, &[0.0, 1.0, 2.0, 3.0], 2);
        let expect = [2.0, -5.0, 4.0, -1.0];
        for (a, b) in w[2].iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn radial_stencils_exact_on_sextics() {
        let radii: Vec<f64> = (0..16).map(|i| 0.1 * 1.15f64.powi(i)).collect();
        let st = radial_stencils(&radii);
        let c = [3.0, -2.0, 5.0, 0.5, -1.5, 0.25, 0.75];
        let f = |r: f64| c.iter().rev().fold(0.0, |acc, ck| acc * r + ck);
        let df = |r: f64| {
            (1..7)
                .map(|k| k as f64 * c[k] * r.powi(k as i32 - 1))
                .sum::<f64>()
        };
        let ddf = |r: f64| {
            (2..7)
                .map(|k| (k * (k - 1)) as f64 * c[k] * r.powi(k as i32 - 2))
                .sum::<f64>()
        };
        for (i, s) in st.iter().enumerate() {
            let r = radii[i];
            let d1: f64 = s.d1.entries().map(|(k, w)| w * f(radii[k])).sum();
            let d2: f64 = s.d2.entries().map(|(k, w)| w * f(radii[k])).sum();
            assert!((d1 - df(r)).abs() < 1e-9 * (1.0 + df(r).abs()), "ring {i}");
            assert!(
                (d2 - ddf(r)).abs() < 1e-7 * (1.0 + ddf(r).abs()),
                "ring {i}"
            );
        }
        assert_eq!(st[0].d2.len, 8);
        assert_eq!(st[8].d1.len, 7);
    }

    #[test]
    fn angular_coefficients_exact_on_first_harmonic() {
        let d = 0.1f64;
        let (c1, c2) = angular_coefficients(d);
        let t = 0.7f64;
        let d1 = c1 * ((t + d).cos() - (t - d).cos());
        let d2 = c2 * ((t + d).cos() - 2.0 * t.cos() + (t - d).cos());
        assert!((d1 + t.sin()).abs() < 1e-14);
        assert!((d2 + t.cos()).abs() < 1e-13);
    }
}

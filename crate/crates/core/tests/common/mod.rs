//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use tfw_core::Grid3;

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 50)
}

/// Direct `O(n^2)` trapezoid quadrature of `-2 pi int int |s - t| f(s) g(t)` on `[-L/2, L/2]^2`.
pub fn d1_direct(f: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> f64, l: f64, n: usize) -> f64 {
    let h = l / n as f64;
    let t: Vec<f64> = (0..=n).map(|j| -0.5 * l + j as f64 * h).collect();
    let w = |j: usize| if j == 0 || j == n { 0.5 * h } else { h };
    let fv: Vec<f64> = t.iter().map(|x| f(*x)).collect();
    let gv: Vec<f64> = t.iter().map(|x| g(*x)).collect();
    let mut sum = 0.0;
    for i in 0..=n {
        let row: f64 = (0..=n).map(|j| (t[i] - t[j]).abs() * gv[j] * w(j)).sum();
        sum += w(i) * fv[i] * row;
    }
    -2.0 * PI * sum
}

/// Dense `-Lap` on `grid`, assembled entrywise from the trigonometric
/// interpolant: per axis `D[i][j] = (1/n) sum_k (2 pi k / side)^2 cos(2 pi k (i - j) / n)`.
pub fn dense_neg_laplacian(grid: &Grid3) -> DMatrix<f64> {
    let dims = grid.dims();
    let sides = grid.cell().sides();
    let axis_matrix = |a: usize| -> DMatrix<f64> {
        let n = dims[a];
        let modes: Vec<i64> = (0..n as i64).map(|j| if j <= n as i64 / 2 { j } else { j - n as i64 }).collect();
        DMatrix::from_fn(n, n, |i, j| {
            modes
                .iter()
                .map(|&k| {
                    let w = 2.0 * PI * k as f64 / sides[a];
                    w * w * (2.0 * PI * k as f64 * (i as f64 - j as f64) / n as f64).cos()
                })
                .sum::<f64>()
                / n as f64
        })
    };
    let d: Vec<DMatrix<f64>> = (0..3).map(axis_matrix).collect();
    let len = grid.len();
    DMatrix::from_fn(len, len, |p, q| {
        let a = grid.unravel(p);
        let b = grid.unravel(q);
        let mut v = 0.0;
        for ax in 0..3 {
            let others_equal = (0..3).filter(|&o| o != ax).all(|o| a[o] == b[o]);
            if others_equal {
                v += d[ax][(a[ax], b[ax])];
            }
        }
        v
    })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// A real trigonometric polynomial with explicit coefficients, so that its
/// potential and Hartree energy are known in closed form.
pub struct TrigPoly {
    pub sides: [f64; 3],
    pub terms: Vec<([i64; 3], f64, f64)>,
}

impl TrigPoly {
    pub fn random(sides: [f64; 3], kmax: [i64; 3], seed: u64) -> Self {
        use rand::Rng;
        let mut r = tfw_core::validate::rng(seed);
        let mut terms = Vec::new();
        for k1 in 0..=kmax[0] {
            for k2 in -kmax[1]..=kmax[1] {
                for k3 in -kmax[2]..=kmax[2] {
                    let positive = k1 > 0 || (k1 == 0 && (k2 > 0 || (k2 == 0 && k3 > 0)));
                    if positive {
                        terms.push(([k1, k2, k3], r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
                    }
                }
            }
        }
        Self { sides, terms }
    }

    pub fn phase(&self, k: [i64; 3], x: [f64; 3]) -> f64 {
        2.0 * PI * (0..3).map(|a| k[a] as f64 * x[a] / self.sides[a]).sum::<f64>()
    }

    pub fn symbol(&self, k: [i64; 3]) -> f64 {
        (0..3).map(|a| (2.0 * PI * k[a] as f64 / self.sides[a]).powi(2)).sum()
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.terms.iter().map(|(k, a, b)| a * self.phase(*k, x).cos() + b * self.phase(*k, x).sin()).sum()
    }

    /// Zero-mean solution of `-Lap Phi = 4 pi f`.
    pub fn potential(&self, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(k, a, b)| 4.0 * PI / self.symbol(*k) * (a * self.phase(*k, x).cos() + b * self.phase(*k, x).sin()))
            .sum()
    }

    /// `(4 pi)^-1 int |grad Phi|^2 = |Gamma| sum 4 pi (a^2 + b^2) / (2 |w_k|^2)`.
    pub fn hartree(&self, volume: f64) -> f64 {
        volume * self.terms.iter().map(|(k, a, b)| 4.0 * PI * (a * a + b * b) / (2.0 * self.symbol(*k))).sum::<f64>()
    }
}

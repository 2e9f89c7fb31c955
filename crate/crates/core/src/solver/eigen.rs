//! Lowest eigenpair of a [`Hamiltonian`] by preconditioned LOBPCG (block size one).

use nalgebra::{DMatrix, SymmetricEigen};

use super::hamiltonian::Hamiltonian;
use crate::error::{Result, TfwError};

/// Outcome of [`lobpcg_lowest`]; `vector` has unit Euclidean norm and nonnegative sum.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn scale(y: &mut [f64], a: f64) {
    y.iter_mut().for_each(|v| *v *= a);
}

/// Preconditioned LOBPCG for the smallest eigenvalue of `op`.
///
/// Converged when `||H x - lambda x|| <= tol` for the unit vector `x`. The
/// preconditioner is the free-Laplacian resolvent `(-Lap + c)^{-1}` with the
/// shift `c` tracking the gap between the mean potential and the current
/// Ritz value.
pub fn lobpcg_lowest(op: &Hamiltonian, guess: &[f64], tol: f64, max_iter: usize) -> Result<Eigenpair> {
    let n = guess.len();
    let mut x = op.project(guess);
    let nx = norm(&x);
    if nx == 0.0 || !nx.is_finite() {
        x = op.project(&vec![1.0; n]);
    }
    let nx = norm(&x);
    scale(&mut x, 1.0 / nx);
    let mut hx = op.apply(&x);
    let mut lambda = dot(&x, &hx);

    let pot = op.potential();
    let mean_pot = pot.iter().sum::<f64>() / n as f64;
    let min_symbol = op.symbol().iter().copied().filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min);
    let min_symbol = if min_symbol.is_finite() { min_symbol } else { 1.0 };

    let mut p: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut residual = f64::INFINITY;
    for it in 0..=max_iter {
        let mut r = hx.clone();
        axpy(&mut r, -lambda, &x);
        residual = norm(&r);
        if residual <= tol {
            // guard against drift in the recurrence for H x
            hx = op.apply(&x);
            lambda = dot(&x, &hx);
            r = hx.clone();
            axpy(&mut r, -lambda, &x);
            residual = norm(&r);
            if residual <= tol {
                if x.iter().sum::<f64>() < 0.0 {
                    scale(&mut x, -1.0);
                }
                return Ok(Eigenpair { value: lambda, vector: x, iterations: it, residual });
            }
        }
        if it == max_iter {
            break;
        }

        let shift = (mean_pot - lambda).abs().max(min_symbol);
        let mut w = op.precondition(&r, shift);

        // basis [x, p, w], orthonormal
        let mut basis: Vec<(Vec<f64>, Vec<f64>)> = vec![(x.clone(), hx.clone())];
        if let Some((mut pv, mut hp)) = p.take() {
            for _ in 0..2 {
                let c = dot(&x, &pv);
                axpy(&mut pv, -c, &x);
                axpy(&mut hp, -c, &hx);
            }
            let np = norm(&pv);
            if np > 1e-12 {
                scale(&mut pv, 1.0 / np);
                scale(&mut hp, 1.0 / np);
                basis.push((pv, hp));
            }
        }
        let wn0 = norm(&w);
        for _ in 0..2 {
            for (b, _) in &basis {
                let c = dot(b, &w);
                axpy(&mut w, -c, b);
            }
        }
        let wn = norm(&w);
        if wn > 1e-13 * wn0.max(f64::MIN_POSITIVE) && wn > 0.0 {
            scale(&mut w, 1.0 / wn);
            let hw = op.apply(&w);
            basis.push((w, hw));
        }
        if basis.len() == 1 {
            break;
        }

        let m = basis.len();
        let mut a = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = 0.5 * (dot(&basis[i].0, &basis[j].1) + dot(&basis[j].0, &basis[i].1));
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(a);
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
        let c = eig.eigenvectors.column(imin);

        let mut xn = vec![0.0; n];
        let mut hxn = vec![0.0; n];
        let mut pn = vec![0.0; n];
        let mut hpn = vec![0.0; n];
        for (k, (b, hb)) in basis.iter().enumerate() {
            axpy(&mut xn, c[k], b);
            axpy(&mut hxn, c[k], hb);
            if k > 0 {
                axpy(&mut pn, c[k], b);
                axpy(&mut hpn, c[k], hb);
            }
        }
        let nn = norm(&xn);
        scale(&mut xn, 1.0 / nn);
        scale(&mut hxn, 1.0 / nn);
        x = xn;
        hx = if (it + 1) % 25 == 0 { op.apply(&x) } else { hxn };
        lambda = dot(&x, &hx);
        p = Some((pn, hpn));
    }
    Err(TfwError::EigensolverStalled { iterations: max_iter, residual })
}

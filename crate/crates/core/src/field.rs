//! Grid functions, periodic trapezoid quadrature and the TFW energy integrands.

use rustfft::num_complex::Complex64;

use crate::cell::Grid3;
use crate::error::{Result, TfwError};
use crate::spectral;

/// Relative negativity clamped to zero by [`power_integral`].
pub const NEGATIVITY_TOL: f64 = 1e-8;

/// Real scalar field sampled on a [`Grid3`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid3,
    values: Vec<f64>,
}

/// Fourier coefficients of a field, stored in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid3,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid3, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(TfwError::GridMismatch);
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_parts(grid: Grid3, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: crate::cell::ModeIndex) -> Option<Complex64> {
        self.grid.mode_flat_index(k).map(|i| self.coeffs[i])
    }
}

impl RealField {
    pub fn new(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(TfwError::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts(grid: Grid3, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn(grid: &Grid3, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn constant(grid: &Grid3, value: f64) -> Self {
        Self { grid: grid.clone(), values: vec![value; grid.len()] }
    }

    pub fn zeros(grid: &Grid3) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(TfwError::GridMismatch);
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True if `min >= -1e-12 max|f|`.
    pub fn is_nonnegative(&self) -> bool {
        self.min() >= -1e-12 * self.max_abs()
    }

    /// Euclidean norm of the sample vector.
    pub fn l2_vector_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Circular shift by whole grid steps along each axis: `out(i) = self(i - steps)`.
    pub fn circular_shift(&self, steps: [isize; 3]) -> Self {
        let d = self.grid.dims();
        let mut out = vec![0.0; self.values.len()];
        for (idx, v) in self.values.iter().enumerate() {
            let p = self.grid.unravel(idx);
            let q: Vec<usize> =
                (0..3).map(|a| (p[a] as isize + steps[a]).rem_euclid(d[a] as isize) as usize).collect();
            out[self.grid.index(q[0], q[1], q[2])] = *v;
        }
        Self { grid: self.grid.clone(), values: out }
    }

    /// Average over `x1, x2` for every `x3` slice.
    pub fn x3_profile(&self) -> Vec<f64> {
        let [n1, n2, n3] = self.grid.dims();
        let mut prof = vec![0.0; n3];
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let base = self.grid.index(i1, i2, 0);
                for (p, v) in prof.iter_mut().zip(&self.values[base..base + n3]) {
                    *p += v;
                }
            }
        }
        let w = 1.0 / (n1 * n2) as f64;
        prof.iter_mut().for_each(|p| *p *= w);
        prof
    }

    /// Broadcast an `x3` profile over the in-plane directions of `grid`.
    pub fn from_x3_profile(grid: &Grid3, profile: &[f64]) -> Result<Self> {
        if profile.len() != grid.dims()[2] {
            return Err(TfwError::GridMismatch);
        }
        let n3 = profile.len();
        let values = (0..grid.len()).map(|i| profile[i % n3]).collect();
        Ok(Self { grid: grid.clone(), values })
    }

    /// Mean over `x3` of the in-plane variance of each slice.
    pub fn inplane_variance(&self) -> f64 {
        let [n1, n2, n3] = self.grid.dims();
        let prof = self.x3_profile();
        let mut acc = 0.0;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let base = self.grid.index(i1, i2, 0);
                for (v, p) in self.values[base..base + n3].iter().zip(&prof) {
                    acc += (v - p) * (v - p);
                }
            }
        }
        acc / self.values.len() as f64
    }
}

/// `|Gamma| * mean(f)`: the periodic trapezoid rule.
pub fn integrate(f: &RealField) -> f64 {
    f.grid.cell().volume() * f.mean()
}

/// `(int |f|^p)^(1/p)`, or `max |f|` for `p = inf`.
pub fn lp_norm(f: &RealField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(TfwError::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let dv = f.grid.cell_volume();
    if p == 1.0 {
        return Ok(f.values.iter().map(|v| v.abs()).sum::<f64>() * dv);
    }
    if p == 2.0 {
        return Ok((f.values.iter().map(|v| v * v).sum::<f64>() * dv).sqrt());
    }
    // scale out the max to keep |f|^p in range
    let s = f.max_abs();
    if s == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = f.values.iter().map(|v| (v.abs() / s).powf(p)).sum();
    Ok(s * (sum * dv).powf(1.0 / p))
}

/// `int |x3| |f(x)| dx`, with `x3` measured from the cell center.
pub fn weighted_l1_x3(f: &RealField) -> f64 {
    let g = &f.grid;
    let n3 = g.dims()[2];
    let dv = g.cell_volume();
    f.values.iter().enumerate().map(|(i, v)| g.coord(2, i % n3).abs() * v.abs()).sum::<f64>() * dv
}

/// `int |grad u|^2 = |Gamma| sum_k 4 pi^2 |kappa_k|^2 |c_k|^2`.
pub fn spectral_gradient_sq_integral(u: &RealField) -> f64 {
    let g = &u.grid;
    let coeffs = spectral::forward_raw(g, &u.values);
    let sum: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| g.laplacian_symbol(g.mode_at(idx)) * c.norm_sqr())
        .sum();
    g.cell().volume() * sum
}

/// `int rho^p`, clamping round-off negativity below [`NEGATIVITY_TOL`].
pub fn power_integral(rho: &RealField, p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(TfwError::InvalidExponent(p));
    }
    let (min, max) = (rho.min(), rho.max_abs());
    if min < -NEGATIVITY_TOL * max {
        return Err(TfwError::NegativeDensity { min, max });
    }
    let dv = rho.grid.cell_volume();
    Ok(rho.values.iter().map(|&v| v.max(0.0).powf(p)).sum::<f64>() * dv)
}

//! Discrete Fourier transforms on [`Grid3`].
//!
//! Coefficients are grid averages:
//!
//! ```text
//! c_k = 1/(n1 n2 n3) sum_x f(x) exp(-i 2 pi (k1 x1/q + k2 x2/q + k3 x3/L))
//! ```
//!
//! so `c_0` is the mean of the field. Grid points start at `-side/2`, which
//! contributes the phase `(-1)^(j1+j2+j3)` relative to a plain FFT.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::cell::{Grid3, ModeIndex};
use crate::error::{Result, TfwError};
use crate::field::{RealField, SpectralField};

/// Hermitian defect above which [`inverse_transform`] rejects its input.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) struct FftPlans {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl FftPlans {
    pub(crate) fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.map(|n| planner.plan_fft_forward(n));
        let inverse = dims.map(|n| planner.plan_fft_inverse(n));
        Self { dims, forward, inverse }
    }

    /// Unnormalized in-place 3D FFT.
    pub(crate) fn process(&self, data: &mut [Complex64], inverse: bool) {
        let [n1, n2, n3] = self.dims;
        debug_assert_eq!(data.len(), n1 * n2 * n3);
        let plans = if inverse { &self.inverse } else { &self.forward };

        if n3 > 1 {
            plans[2].process(data);
        }
        if n2 > 1 {
            let mut line = vec![Complex64::default(); n2];
            for i1 in 0..n1 {
                for i3 in 0..n3 {
                    for (i2, v) in line.iter_mut().enumerate() {
                        *v = data[(i1 * n2 + i2) * n3 + i3];
                    }
                    plans[1].process(&mut line);
                    for (i2, v) in line.iter().enumerate() {
                        data[(i1 * n2 + i2) * n3 + i3] = *v;
                    }
                }
            }
        }
        if n1 > 1 {
            let stride = n2 * n3;
            let mut line = vec![Complex64::default(); n1];
            for r in 0..stride {
                for (i1, v) in line.iter_mut().enumerate() {
                    *v = data[i1 * stride + r];
                }
                plans[0].process(&mut line);
                for (i1, v) in line.iter().enumerate() {
                    data[i1 * stride + r] = *v;
                }
            }
        }
    }
}

#[inline]
fn origin_phase(grid: &Grid3, idx: usize) -> f64 {
    let [j1, j2, j3] = grid.unravel(idx);
    let d = grid.dims();
    // (-1)^j on axes with more than one point
    let parity = [j1, j2, j3].iter().zip(d.iter()).filter(|(j, n)| **n > 1 && **j % 2 == 1).count();
    if parity % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn forward_raw(grid: &Grid3, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.plans().process(&mut data, false);
    let scale = 1.0 / grid.len() as f64;
    for (idx, c) in data.iter_mut().enumerate() {
        *c *= scale * origin_phase(grid, idx);
    }
    data
}

/// Real part of the inverse transform; no symmetry check.
pub(crate) fn inverse_raw(grid: &Grid3, coeffs: &[Complex64]) -> Vec<f64> {
    let mut data: Vec<Complex64> =
        coeffs.iter().enumerate().map(|(idx, c)| c * origin_phase(grid, idx)).collect();
    grid.plans().process(&mut data, true);
    data.into_iter().map(|c| c.re).collect()
}

/// Multiply by a real, even Fourier multiplier. The origin phase cancels.
pub(crate) fn apply_multiplier(grid: &Grid3, values: &[f64], multiplier: &[f64]) -> Vec<f64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let plans = grid.plans();
    plans.process(&mut data, false);
    let scale = 1.0 / grid.len() as f64;
    for (c, m) in data.iter_mut().zip(multiplier) {
        *c *= m * scale;
    }
    plans.process(&mut data, true);
    data.into_iter().map(|c| c.re).collect()
}

pub fn forward_transform(field: &RealField) -> SpectralField {
    let coeffs = forward_raw(field.grid(), field.values());
    SpectralField::from_parts(field.grid().clone(), coeffs)
}

pub fn inverse_transform(coeffs: &SpectralField) -> Result<RealField> {
    let grid = coeffs.grid();
    let defect = hermitian_defect(grid, coeffs.coeffs());
    let scale = coeffs.coeffs().iter().map(|c| c.norm()).fold(1.0, f64::max);
    if defect > HERMITIAN_TOL * scale {
        return Err(TfwError::NonHermitianInput { defect });
    }
    RealField::new(grid.clone(), inverse_raw(grid, coeffs.coeffs()))
}

pub fn laplacian_symbol(grid: &Grid3, k: ModeIndex) -> f64 {
    grid.laplacian_symbol(k)
}

/// `max_k |c_{-k} - conj(c_k)|`.
pub fn hermitian_defect(grid: &Grid3, coeffs: &[Complex64]) -> f64 {
    let [n1, n2, n3] = grid.dims();
    let mut worst: f64 = 0.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let [j1, j2, j3] = grid.unravel(idx);
        let m = grid.index((n1 - j1) % n1, (n2 - j2) % n2, (n3 - j3) % n3);
        worst = worst.max((coeffs[m] - c.conj()).norm());
    }
    worst
}

/// Zero every mode with `|k_a| > cutoff[a]` on some axis.
pub fn apply_mode_cutoff(grid: &Grid3, coeffs: &mut [Complex64], cutoff: [usize; 3]) {
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let k = grid.mode_at(idx).0;
        if (0..3).any(|a| k[a].unsigned_abs() as usize > cutoff[a]) {
            *c = Complex64::default();
        }
    }
}

/// Low-pass filter of a real field.
pub fn filter_modes(field: &RealField, cutoff: [usize; 3]) -> RealField {
    let grid = field.grid();
    let mut coeffs = forward_raw(grid, field.values());
    apply_mode_cutoff(grid, &mut coeffs, cutoff);
    RealField::from_parts(grid.clone(), inverse_raw(grid, &coeffs))
}

/// Trigonometric interpolation of `field` onto `target` (same cell).
///
/// Nyquist coefficients are split evenly between `+n/2` and `-n/2` so that
/// real fields stay real and refinement followed by coarsening is exact.
pub fn resample(field: &RealField, target: &Grid3) -> Result<RealField> {
    let src = field.grid();
    if src.cell() != target.cell() {
        return Err(TfwError::GridMismatch);
    }
    if src == target {
        return Ok(field.clone());
    }
    let coeffs = forward_raw(src, field.values());
    let mut out = vec![Complex64::default(); target.len()];
    let sd = src.dims();
    for (idx, c) in coeffs.iter().enumerate() {
        let pos = src.unravel(idx);
        let k = src.mode_at(idx).0;
        // expand Nyquist positions into the symmetric pair
        let mut variants: Vec<([i64; 3], f64)> = vec![(k, 1.0)];
        for a in 0..3 {
            if src.is_nyquist(a, pos[a]) {
                let mut next = Vec::with_capacity(variants.len() * 2);
                for (kv, w) in variants {
                    let mut neg = kv;
                    neg[a] = -(sd[a] as i64 / 2);
                    next.push((kv, 0.5 * w));
                    next.push((neg, 0.5 * w));
                }
                variants = next;
            }
        }
        for (kv, w) in variants {
            if let Some(t) = target.mode_flat_index(ModeIndex(kv)) {
                out[t] += c * w;
            }
        }
    }
    Ok(RealField::from_parts(target.clone(), inverse_raw(target, &out)))
}

/// Samples of `x -> field(x + shift)`, exact for the trigonometric
/// interpolant once Nyquist modes are dropped.
pub fn translate(field: &RealField, shift: [f64; 3]) -> RealField {
    let grid = field.grid();
    let mut coeffs = forward_raw(grid, field.values());
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let pos = grid.unravel(idx);
        if (0..3).any(|a| grid.is_nyquist(a, pos[a])) {
            *c = Complex64::default();
            continue;
        }
        let f = grid.frequency(grid.mode_at(idx));
        let arg = 2.0 * PI * (f[0] * shift[0] + f[1] * shift[1] + f[2] * shift[2]);
        *c *= Complex64::from_polar(1.0, arg);
    }
    RealField::from_parts(grid.clone(), inverse_raw(grid, &coeffs))
}

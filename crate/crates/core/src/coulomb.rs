//! Periodic Coulomb machinery.
//!
//! The mean-field potential of a neutral charge `f` solves `-Lap Phi = 4 pi f`
//! on the periodized cell. It is computed spectrally with the zero-mean gauge
//! `Phi_hat(0) = 0`; the additive constant is absorbed by the Lagrange
//! multiplier of the SCF problem.
//!
//! [`eval_green_realspace`] evaluates the 2D-periodic Green function
//!
//! ```text
//! G(x) = -(2 pi/|Q|) |x3| + sum_{k in R} ( 1/|x - (k,0)| - 1/|Q| int_Q dy/|x - (y+k,0)| )
//! ```
//!
//! by a truncated lattice sum. It only serves to cross-check the spectral
//! solver.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::cell::{Grid3, UnitCell};
use crate::error::{Result, TfwError};
use crate::field::{self, RealField};
use crate::quadrature::gauss_legendre;
use crate::spectral;

/// Relative tolerance on `|int f| / ||f||_1` for neutral fields.
pub const NEUTRALITY_TOL: f64 = 1e-8;

/// A field with zero integral over the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct NeutralField {
    inner: RealField,
}

impl NeutralField {
    pub fn new(inner: RealField) -> Result<Self> {
        let net = field::integrate(&inner);
        let mass = field::lp_norm(&inner, 1.0)?;
        if net.abs() > NEUTRALITY_TOL * mass {
            return Err(TfwError::NotNeutral { net, mass });
        }
        Ok(Self { inner })
    }

    /// Subtract the grid mean. Used to strip round-off charge before a solve.
    pub fn neutralize(f: &RealField) -> Self {
        let mean = f.mean();
        Self { inner: f.map(|v| v - mean) }
    }

    pub fn inner(&self) -> &RealField {
        &self.inner
    }

    pub fn into_inner(self) -> RealField {
        self.inner
    }

    pub fn grid(&self) -> &Grid3 {
        self.inner.grid()
    }
}

/// Multiplier `4 pi / (4 pi^2 |kappa|^2)`, zero on the mean mode.
pub(crate) fn coulomb_multiplier(grid: &Grid3, sign: f64) -> Vec<f64> {
    grid.laplacian_symbols()
        .into_iter()
        .map(|s| if s == 0.0 { 0.0 } else { sign * 4.0 * PI / s })
        .collect()
}

pub(crate) fn solve_poisson_signed(f: &NeutralField, sign: f64) -> RealField {
    let grid = f.grid();
    let mult = coulomb_multiplier(grid, sign);
    let values = spectral::apply_multiplier(grid, f.inner().values(), &mult);
    RealField::new(grid.clone(), values).expect("same grid")
}

/// Zero-mean solution of `-Lap Phi = 4 pi f`.
pub fn solve_poisson(f: &NeutralField) -> RealField {
    solve_poisson_signed(f, 1.0)
}

pub(crate) fn hartree_signed(f: &NeutralField, g: &NeutralField, sign: f64) -> Result<f64> {
    f.inner().ensure_same_grid(g.inner())?;
    let grid = f.grid();
    let fh = spectral::forward_raw(grid, f.inner().values());
    let gh = spectral::forward_raw(grid, g.inner().values());
    let mut sum = 0.0;
    for (idx, (a, b)) in fh.iter().zip(&gh).enumerate() {
        let s = grid.laplacian_symbol(grid.mode_at(idx));
        if s > 0.0 {
            sum += (a.conj() * b).re / s;
        }
    }
    Ok(sign * grid.cell().volume() * 4.0 * PI * sum)
}

/// `D_G(f, g) = int int f(x) g(y) G(x - y)`, evaluated in Fourier space.
pub fn hartree_dg(f: &NeutralField, g: &NeutralField) -> Result<f64> {
    hartree_signed(f, g, 1.0)
}

/// 1D Hartree form on a line grid.
///
/// This is the periodized spectral value. It coincides with the kernel form
/// `-2 pi int int |s - t| f(s) g(t)` whenever the dipole moment of `f` or `g`
/// vanishes; in general the two differ by `-(4 pi/L) p_f p_g`.
pub fn hartree_d1(f: &NeutralField, g: &NeutralField) -> Result<f64> {
    if !f.grid().is_line() {
        return Err(TfwError::InvalidGrid("hartree_d1 needs a line grid".into()));
    }
    hartree_dg(f, g)
}

/// Truncation parameters for the real-space lattice sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreenEvalConfig {
    /// Lattice vectors `k` with `|k| <= lattice_cutoff * q_side` are summed.
    pub lattice_cutoff: usize,
    /// Gauss-Legendre points per axis for cell averages of far cells.
    pub quad_points: usize,
}

impl Default for GreenEvalConfig {
    fn default() -> Self {
        Self { lattice_cutoff: 20, quad_points: 16 }
    }
}

impl GreenEvalConfig {
    pub fn new(lattice_cutoff: usize, quad_points: usize) -> Result<Self> {
        let cfg = Self { lattice_cutoff, quad_points };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lattice_cutoff < 2 {
            return Err(TfwError::InvalidGreenConfig("lattice_cutoff must be >= 2".into()));
        }
        if self.quad_points < 16 {
            return Err(TfwError::InvalidGreenConfig("quad_points must be >= 16".into()));
        }
        Ok(())
    }
}

/// Truncated lattice-sum evaluator of the periodic Green function.
///
/// The sum runs over lattice sites within `lattice_cutoff` of the image of
/// `x` reduced into `Q`, so the truncated kernel is exactly periodic in
/// `x1, x2` and even. Cell averages of the 3x3 block of cells around the
/// reduced point use the closed-form potential of a uniform square; the
/// remaining cells use tensor Gauss-Legendre quadrature.
#[derive(Debug, Clone)]
pub struct GreenFunction {
    q: f64,
    sites: Vec<(i64, i64)>,
    nodes: Vec<(f64, f64)>,
}

impl GreenFunction {
    pub fn new(cell: &UnitCell, cfg: GreenEvalConfig) -> Result<Self> {
        cfg.validate()?;
        let c = cfg.lattice_cutoff as i64;
        let mut sites = Vec::new();
        for i in -c..=c {
            for j in -c..=c {
                if i * i + j * j <= c * c {
                    sites.push((i, j));
                }
            }
        }
        let (x, w) = gauss_legendre(cfg.quad_points);
        // nodes on [-1/2, 1/2], weights summing to 1
        let nodes = x.iter().zip(&w).map(|(x, w)| (0.5 * x, 0.5 * w)).collect();
        Ok(Self { q: cell.q_side(), sites, nodes })
    }

    fn reduce(&self, x: [f64; 3]) -> [f64; 3] {
        let q = self.q;
        [x[0] - q * (x[0] / q).round(), x[1] - q * (x[1] / q).round(), x[2]]
    }

    pub fn eval(&self, x: [f64; 3]) -> Result<f64> {
        let x = self.reduce(x);
        let q = self.q;
        let area = q * q;
        let z = x[2];
        if (x[0] * x[0] + x[1] * x[1] + z * z).sqrt() < 1e-9 {
            return Err(TfwError::SingularPoint);
        }
        let mut sum = -2.0 * PI / area * z.abs();
        for &(i, j) in &self.sites {
            let dx = x[0] - q * i as f64;
            let dy = x[1] - q * j as f64;
            let point = 1.0 / (dx * dx + dy * dy + z * z).sqrt();
            let avg = if i.abs() <= 1 && j.abs() <= 1 {
                square_potential(dx, dy, z, q) / area
            } else {
                self.gauss_average(dx, dy, z)
            };
            sum += point - avg;
        }
        Ok(sum)
    }

    fn gauss_average(&self, dx: f64, dy: f64, z: f64) -> f64 {
        let q = self.q;
        let z2 = z * z;
        let mut acc = 0.0;
        for &(ta, wa) in &self.nodes {
            let u = dx - q * ta;
            let u2 = u * u + z2;
            let mut row = 0.0;
            for &(tb, wb) in &self.nodes {
                let v = dy - q * tb;
                row += wb / (u2 + v * v).sqrt();
            }
            acc += wa * row;
        }
        acc
    }

    /// `psi(x) = G(x) + (2 pi/|Q|)|x3| - 1/|x|`, with `x` reduced into `Q`.
    pub fn psi(&self, x: [f64; 3]) -> Result<f64> {
        let r = self.reduce(x);
        let g = self.eval(r)?;
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        Ok(g + 2.0 * PI / (self.q * self.q) * r[2].abs() - 1.0 / norm)
    }
}

/// `u ln(v + r)` without cancellation for negative `v`.
fn u_log_v_plus_r(u: f64, v: f64, r: f64, u2_plus_z2: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    if v >= 0.0 {
        u * (v + r).ln()
    } else {
        u * (u2_plus_z2 / (r - v)).ln()
    }
}

fn square_antiderivative(u: f64, v: f64, z: f64) -> f64 {
    let z2 = z * z;
    let r = (u * u + v * v + z2).sqrt();
    let mut f = u_log_v_plus_r(u, v, r, u * u + z2) + u_log_v_plus_r(v, u, r, v * v + z2);
    if z != 0.0 {
        let az = z.abs();
        f -= az * (u * v / (az * r)).atan();
    }
    f
}

/// `int_{[-q/2, q/2]^2} dy / |(dx, dy, z) - (y, 0)|` in closed form.
pub fn square_potential(dx: f64, dy: f64, z: f64, q: f64) -> f64 {
    let h = 0.5 * q;
    let (u1, u2) = (-h - dx, h - dx);
    let (v1, v2) = (-h - dy, h - dy);
    square_antiderivative(u2, v2, z) - square_antiderivative(u1, v2, z)
        - square_antiderivative(u2, v1, z)
        + square_antiderivative(u1, v1, z)
}

fn prism_antiderivative(x: f64, y: f64, z: f64) -> f64 {
    let r = (x * x + y * y + z * z).sqrt();
    if r == 0.0 {
        return 0.0;
    }
    let xlog = |c: f64, a: f64| if c == 0.0 { 0.0 } else { c * (a + r).ln() };
    let xatan = |a: f64, b: f64, c: f64| if a == 0.0 { 0.0 } else { 0.5 * a * a * (b * c / (a * r)).atan() };
    xlog(x * y, z) + xlog(y * z, x) + xlog(z * x, y) - xatan(x, y, z) - xatan(y, z, x) - xatan(z, x, y)
}

/// `int_box dy / |y|` for a box `[lo, hi]` in the closed first octant.
pub fn prism_potential(lo: [f64; 3], hi: [f64; 3]) -> f64 {
    let mut sum = 0.0;
    for (cx, x) in [(1.0, hi[0]), (-1.0, lo[0])] {
        for (cy, y) in [(1.0, hi[1]), (-1.0, lo[1])] {
            for (cz, z) in [(1.0, hi[2]), (-1.0, lo[2])] {
                sum += cx * cy * cz * prism_antiderivative(x, y, z);
            }
        }
    }
    sum
}

/// Evaluate the truncated periodic Green function at `x`.
pub fn eval_green_realspace(cell: &UnitCell, x: [f64; 3], cfg: GreenEvalConfig) -> Result<f64> {
    GreenFunction::new(cell, cfg)?.eval(x)
}

/// Relative L2 discrepancy between the real-space convolution `G * f` and the
/// spectral Poisson solution, both taken with zero mean.
///
/// The convolution is evaluated on the grid shifted by half a step in every
/// direction, so the kernel singularity never meets a source point; the
/// spectral solution is translated onto the same points exactly. Cells
/// close to the singularity use the exact cell average of `1/r`. The test
/// density should be localized in `x3` well inside the cell.
pub fn validate_green_vs_spectral(f: &NeutralField, cfg: GreenEvalConfig) -> Result<f64> {
    let grid = f.grid();
    if grid.is_line() {
        return Err(TfwError::InvalidGrid("green validation needs a 3D grid".into()));
    }
    let green = GreenFunction::new(grid.cell(), cfg)?;
    let [n1, n2, n3] = grid.dims();
    let h = grid.spacing();
    let (m1, m2) = (n1.div_ceil(2), n2.div_ceil(2));
    let near = 4.0 * h.iter().copied().fold(0.0, f64::max);

    // G is even in each coordinate: tabulate |offsets| only.
    let table: Vec<f64> = (0..m1 * m2 * n3)
        .into_par_iter()
        .map(|t| {
            let a3 = t % n3;
            let a2 = (t / n3) % m2;
            let a1 = t / (n3 * m2);
            let x = [(a1 as f64 + 0.5) * h[0], (a2 as f64 + 0.5) * h[1], (a3 as f64 + 0.5) * h[2]];
            let g = green.eval(x)?;
            // near the singularity, replace the point value of 1/r by its cell average
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            if r > near {
                return Ok(g);
            }
            let lo = [a1 as f64 * h[0], a2 as f64 * h[1], a3 as f64 * h[2]];
            let hi = [lo[0] + h[0], lo[1] + h[1], lo[2] + h[2]];
            Ok(g - 1.0 / r + prism_potential(lo, hi) / (h[0] * h[1] * h[2]))
        })
        .collect::<Result<_>>()?;

    let fold = |d: usize, n: usize| -> usize { d.min(n - 1 - d) };
    let values = f.inner().values();
    let dv = grid.cell_volume();
    let sources: Vec<(usize, [usize; 3], f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, grid.unravel(i), *v))
        .collect();
    let conv: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|t| {
            let p = grid.unravel(t);
            let mut acc = 0.0;
            for &(_, s, v) in &sources {
                let d1 = fold((p[0] + n1 - s[0]) % n1, n1);
                let d2 = fold((p[1] + n2 - s[1]) % n2, n2);
                let d3 = p[2] as isize - s[2] as isize;
                let a3 = if d3 >= 0 { d3 as usize } else { (-d3 - 1) as usize };
                acc += v * table[(d1 * m2 + d2) * n3 + a3];
            }
            acc * dv
        })
        .collect();

    let phi = solve_poisson(f);
    let shifted = spectral::translate(&phi, [0.5 * h[0], 0.5 * h[1], 0.5 * h[2]]);
    let conv_mean = conv.iter().sum::<f64>() / conv.len() as f64;
    let spec_mean = shifted.mean();
    let mut num = 0.0;
    let mut den = 0.0;
    for (c, s) in conv.iter().zip(shifted.values()) {
        let a = c - conv_mean;
        let b = s - spec_mean;
        num += (a - b) * (a - b);
        den += b * b;
    }
    if den == 0.0 {
        return Ok(num.sqrt());
    }
    Ok((num / den).sqrt())
}

//! Computational cell and uniform periodic grids.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Result, TfwError};
use crate::spectral::FftPlans;

/// The periodized cell `Q x [-L/2, L/2]` with `Q` a square of side `q_side`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCell {
    q_side: f64,
    length_x3: f64,
}

impl UnitCell {
    pub fn new(q_side: f64, length_x3: f64) -> Result<Self> {
        if !(q_side.is_finite() && q_side > 0.0) {
            return Err(TfwError::InvalidCell(format!("q_side must be > 0, got {q_side}")));
        }
        if !(length_x3.is_finite() && length_x3 > 0.0) {
            return Err(TfwError::InvalidCell(format!(
                "length_x3 must be > 0, got {length_x3}"
            )));
        }
        Ok(Self { q_side, length_x3 })
    }

    /// Unit square `Q = [-1/2, 1/2]^2` and `L = 2 pi`.
    pub fn standard() -> Self {
        Self { q_side: 1.0, length_x3: 2.0 * PI }
    }

    pub fn q_side(&self) -> f64 {
        self.q_side
    }

    pub fn length_x3(&self) -> f64 {
        self.length_x3
    }

    /// `|Q|`.
    pub fn area(&self) -> f64 {
        self.q_side * self.q_side
    }

    /// `|Gamma| = q_side^2 * L`.
    pub fn volume(&self) -> f64 {
        self.q_side * self.q_side * self.length_x3
    }

    /// Side lengths per axis.
    pub fn sides(&self) -> [f64; 3] {
        [self.q_side, self.q_side, self.length_x3]
    }
}

/// Signed Fourier mode index `(k1, k2, k3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex(pub [i64; 3]);

impl ModeIndex {
    pub const ZERO: ModeIndex = ModeIndex([0, 0, 0]);

    pub fn new(k1: i64, k2: i64, k3: i64) -> Self {
        Self([k1, k2, k3])
    }

    pub fn negated(self) -> Self {
        Self([-self.0[0], -self.0[1], -self.0[2]])
    }
}

/// Uniform periodic grid on a [`UnitCell`].
///
/// Axis `a` holds `n_a` points `x_j = -side_a/2 + j side_a / n_a`. Every axis
/// count is even, except that an axis of a single point is allowed: this is
/// how line grids for the reduced 1D problem are represented.
#[derive(Clone)]
pub struct Grid3 {
    dims: [usize; 3],
    cell: UnitCell,
    plans: Arc<FftPlans>,
}

impl fmt::Debug for Grid3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid3")
            .field("dims", &self.dims)
            .field("cell", &self.cell)
            .finish()
    }
}

impl PartialEq for Grid3 {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.cell == other.cell
    }
}

impl Grid3 {
    pub fn new(cell: UnitCell, n1: usize, n2: usize, n3: usize) -> Result<Self> {
        let dims = [n1, n2, n3];
        for (axis, &n) in dims.iter().enumerate() {
            if n == 0 || (n != 1 && n % 2 != 0) {
                return Err(TfwError::InvalidGrid(format!(
                    "axis {} has {n} points; counts must be even (or 1 for a flat axis)",
                    axis + 1
                )));
            }
        }
        if n3 < 2 {
            return Err(TfwError::InvalidGrid("the x3 axis needs at least 2 points".into()));
        }
        Ok(Self { dims, cell, plans: Arc::new(FftPlans::new(dims)) })
    }

    /// Line grid over `[-L/2, L/2]` for the reduced problem (`n1 = n2 = 1`, `q_side = 1`).
    pub fn line(length_x3: f64, n3: usize) -> Result<Self> {
        Self::new(UnitCell::new(1.0, length_x3)?, 1, 1, n3)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell(&self) -> &UnitCell {
        &self.cell
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True for grids with a single point in both in-plane directions.
    pub fn is_line(&self) -> bool {
        self.dims[0] == 1 && self.dims[1] == 1
    }

    pub fn spacing(&self) -> [f64; 3] {
        let s = self.cell.sides();
        [s[0] / self.dims[0] as f64, s[1] / self.dims[1] as f64, s[2] / self.dims[2] as f64]
    }

    /// Volume element of the trapezoid rule.
    pub fn cell_volume(&self) -> f64 {
        self.cell.volume() / self.len() as f64
    }

    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        let side = self.cell.sides()[axis];
        -0.5 * side + j as f64 * side / self.dims[axis] as f64
    }

    /// Flat index, `i3` fastest.
    #[inline]
    pub fn index(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.dims[1] + i2) * self.dims[2] + i3
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let i3 = idx % self.dims[2];
        let rest = idx / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], i3]
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [i1, i2, i3] = self.unravel(idx);
        [self.coord(0, i1), self.coord(1, i2), self.coord(2, i3)]
    }

    /// Signed mode number stored at position `j` of axis `axis`. The Nyquist
    /// position maps to `+n/2`.
    #[inline]
    pub fn signed_mode(&self, axis: usize, j: usize) -> i64 {
        let n = self.dims[axis];
        if j <= n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    /// Storage position of signed mode `k` along `axis`, if representable.
    pub fn mode_position(&self, axis: usize, k: i64) -> Option<usize> {
        let n = self.dims[axis] as i64;
        if k.abs() > n / 2 {
            return None;
        }
        Some(k.rem_euclid(n) as usize)
    }

    pub fn mode_at(&self, idx: usize) -> ModeIndex {
        let [j1, j2, j3] = self.unravel(idx);
        ModeIndex([self.signed_mode(0, j1), self.signed_mode(1, j2), self.signed_mode(2, j3)])
    }

    pub fn mode_flat_index(&self, k: ModeIndex) -> Option<usize> {
        let j1 = self.mode_position(0, k.0[0])?;
        let j2 = self.mode_position(1, k.0[1])?;
        let j3 = self.mode_position(2, k.0[2])?;
        Some(self.index(j1, j2, j3))
    }

    /// True if `j` is the Nyquist position of an axis with more than one point.
    #[inline]
    pub fn is_nyquist(&self, axis: usize, j: usize) -> bool {
        let n = self.dims[axis];
        n > 1 && j == n / 2
    }

    /// Continuous frequency `(k1/q, k2/q, k3/L)`.
    pub fn frequency(&self, k: ModeIndex) -> [f64; 3] {
        let s = self.cell.sides();
        [k.0[0] as f64 / s[0], k.0[1] as f64 / s[1], k.0[2] as f64 / s[2]]
    }

    /// Eigenvalue `4 pi^2 |kappa|^2` of `-Laplacian` on mode `k`.
    pub fn laplacian_symbol(&self, k: ModeIndex) -> f64 {
        let f = self.frequency(k);
        4.0 * PI * PI * (f[0] * f[0] + f[1] * f[1] + f[2] * f[2])
    }

    /// `laplacian_symbol` for every storage position.
    pub fn laplacian_symbols(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.laplacian_symbol(self.mode_at(i))).collect()
    }

    pub(crate) fn plans(&self) -> &FftPlans {
        &self.plans
    }

    /// Same cell, different sample counts.
    pub fn with_dims(&self, n1: usize, n2: usize, n3: usize) -> Result<Self> {
        Self::new(self.cell, n1, n2, n3)
    }

    /// Line grid sharing this grid's `x3` axis.
    pub fn x3_line(&self) -> Result<Self> {
        Self::line(self.cell.length_x3(), self.dims[2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_cells_and_grids() {
        assert!(UnitCell::new(0.0, 1.0).is_err());
        assert!(UnitCell::new(1.0, -2.0).is_err());
        let cell = UnitCell::standard();
        assert!(Grid3::new(cell, 3, 4, 8).is_err());
        assert!(Grid3::new(cell, 4, 4, 1).is_err());
        assert!(Grid3::new(cell, 1, 1, 300).is_ok());
    }

    #[test]
    fn volume_is_exact() {
        let cell = UnitCell::new(1.5, 2.0).unwrap();
        assert_eq!(cell.volume(), 1.5 * 1.5 * 2.0);
    }

    #[test]
    fn mode_mapping_round_trips() {
        let g = Grid3::new(UnitCell::standard(), 8, 4, 6).unwrap();
        for idx in 0..g.len() {
            let k = g.mode_at(idx);
            assert_eq!(g.mode_flat_index(k), Some(idx));
            assert!(k.0[0].abs() <= 4 && k.0[1].abs() <= 2 && k.0[2].abs() <= 3);
        }
    }

    #[test]
    fn laplacian_symbol_values() {
        let cell = UnitCell::new(1.0, 2.0 * PI).unwrap();
        let g = Grid3::new(cell, 4, 4, 8).unwrap();
        assert_eq!(g.laplacian_symbol(ModeIndex::ZERO), 0.0);
        assert!((g.laplacian_symbol(ModeIndex::new(1, 0, 0)) - 4.0 * PI * PI).abs() < 1e-12);
        assert!((g.laplacian_symbol(ModeIndex::new(0, 0, 2)) - 4.0).abs() < 1e-12);
        let k = ModeIndex::new(1, -2, 3);
        assert_eq!(g.laplacian_symbol(k), g.laplacian_symbol(k.negated()));
    }

    #[test]
    fn grid_points_exclude_endpoint() {
        let g = Grid3::new(UnitCell::standard(), 4, 2, 8).unwrap();
        assert_eq!(g.coord(0, 0), -0.5);
        assert!((g.coord(0, 3) - 0.25).abs() < 1e-15);
        assert!((g.coord(2, 0) + PI).abs() < 1e-15);
    }
}

use rustfft::num_complex::Complex64;

use crate::cell::Grid3;
use crate::error::Result;
use crate::field::RealField;
use crate::spectral;

/// Matrix-free Schrodinger-type operator `-Lap + V` on a grid.
///
/// With a mode cutoff the operator is the Galerkin projection `P (-Lap + V) P`
/// onto the retained Fourier modes.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: Grid3,
    symbol: Vec<f64>,
    potential: Vec<f64>,
    cutoff: Option<[usize; 3]>,
}

impl Hamiltonian {
    /// `H = -Lap + coef + phi`.
    pub fn new(coef: &RealField, phi: &RealField) -> Result<Self> {
        coef.ensure_same_grid(phi)?;
        let potential = coef.values().iter().zip(phi.values()).map(|(a, b)| a + b).collect();
        Ok(Self::from_potential(coef.grid(), potential))
    }

    pub fn from_potential(grid: &Grid3, potential: Vec<f64>) -> Self {
        debug_assert_eq!(potential.len(), grid.len());
        Self { grid: grid.clone(), symbol: grid.laplacian_symbols(), potential, cutoff: None }
    }

    pub fn with_cutoff(mut self, cutoff: Option<[usize; 3]>) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn cutoff(&self) -> Option<[usize; 3]> {
        self.cutoff
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// Orthogonal projection onto the retained modes (identity without cutoff).
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        match self.cutoff {
            None => v.to_vec(),
            Some(c) => {
                let mut coeffs = spectral::forward_raw(&self.grid, v);
                spectral::apply_mode_cutoff(&self.grid, &mut coeffs, c);
                spectral::inverse_raw(&self.grid, &coeffs)
            }
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self.cutoff {
            None => {
                let mut out = spectral::apply_multiplier(&self.grid, v, &self.symbol);
                for ((o, p), x) in out.iter_mut().zip(&self.potential).zip(v) {
                    *o += p * x;
                }
                out
            }
            Some(c) => {
                let mut coeffs = spectral::forward_raw(&self.grid, v);
                spectral::apply_mode_cutoff(&self.grid, &mut coeffs, c);
                let pv = spectral::inverse_raw(&self.grid, &coeffs);
                let lap: Vec<Complex64> =
                    coeffs.iter().zip(&self.symbol).map(|(c, s)| c * s).collect();
                let mut out = spectral::inverse_raw(&self.grid, &lap);
                for ((o, p), x) in out.iter_mut().zip(&self.potential).zip(&pv) {
                    *o += p * x;
                }
                self.project(&out)
            }
        }
    }

    /// Approximate inverse `(-Lap + shift)^{-1}`, used as preconditioner.
    pub fn precondition(&self, r: &[f64], shift: f64) -> Vec<f64> {
        let mult: Vec<f64> = self.symbol.iter().map(|s| 1.0 / (s + shift)).collect();
        let out = spectral::apply_multiplier(&self.grid, r, &mult);
        match self.cutoff {
            None => out,
            Some(_) => self.project(&out),
        }
    }
}

/// `(-Lap v) + (coef + phi) v`.
pub fn apply_hamiltonian(coef: &RealField, phi: &RealField, v: &RealField) -> Result<RealField> {
    coef.ensure_same_grid(v)?;
    let h = Hamiltonian::new(coef, phi)?;
    RealField::new(v.grid().clone(), h.apply(v.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::UnitCell;
    use crate::error::TfwError;
    use std::f64::consts::PI;

    fn grid() -> Grid3 {
        Grid3::new(UnitCell::new(1.0, 2.0).unwrap(), 4, 4, 8).unwrap()
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let g = grid();
        let z = RealField::zeros(&g);
        let out = apply_hamiltonian(&z, &z, &RealField::constant(&g, 2.5)).unwrap();
        assert!(out.max_abs() < 1e-13);
    }

    #[test]
    fn constant_potential_shifts() {
        let g = grid();
        let z = RealField::zeros(&g);
        let c = RealField::constant(&g, 1.75);
        let v = RealField::from_fn(&g, |x| (2.0 * PI * x[0]).sin() + (PI * x[2]).cos());
        let out = apply_hamiltonian(&z, &c, &v).unwrap();
        let lap = apply_hamiltonian(&z, &z, &v).unwrap();
        for ((o, l), x) in out.values().iter().zip(lap.values()).zip(v.values()) {
            assert!((o - (l + 1.75 * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_mismatch() {
        let g = grid();
        let other = g.with_dims(4, 4, 16).unwrap();
        let r = apply_hamiltonian(&RealField::zeros(&g), &RealField::zeros(&g), &RealField::zeros(&other));
        assert_eq!(r.unwrap_err(), TfwError::GridMismatch);
    }
}

use std::f64::consts::PI;

use crate::cell::Grid3;
use crate::error::{Result, TfwError};
use crate::field::{self, RealField};
use crate::spectral;

/// Nuclear charge density `m`.
#[derive(Debug, Clone, PartialEq)]
pub enum NuclearModel {
    /// `amplitude * |cos(n pi x1)| * exp(-x3^2 / gauss_width)`.
    SeparableCosGauss { n: u32, amplitude: f64, gauss_width: f64 },
    /// Uniform density.
    Constant(f64),
    /// Samples on a fixed grid.
    Tabulated(RealField),
    /// In-plane invariant density given by its values on the `x3` points of a
    /// line grid over `[-L/2, L/2]`.
    X3Profile(Vec<f64>),
}

/// Fourier coefficient `a_j` of `|cos(pi y)| = sum_j a_j cos(2 pi j y)`.
pub fn abs_cos_coefficient(j: u32) -> f64 {
    if j == 0 {
        2.0 / PI
    } else {
        let j = j as f64;
        let sign = if (j as u64) % 2 == 1 { 1.0 } else { -1.0 };
        4.0 / PI * sign / (4.0 * j * j - 1.0)
    }
}

impl NuclearModel {
    /// `m_N(x) = (5 pi/2) |cos(N pi x1)| exp(-x3^2/8)`.
    pub fn standard(n: u32) -> Self {
        Self::SeparableCosGauss { n, amplitude: 2.5 * PI, gauss_width: 8.0 }
    }

    /// In-plane average of [`NuclearModel::standard`]: `5 exp(-x3^2/8)` on the `x3` points of `line`.
    pub fn standard_profile(line: &Grid3) -> Self {
        let n3 = line.dims()[2];
        Self::X3Profile((0..n3).map(|j| 5.0 * (-line.coord(2, j).powi(2) / 8.0).exp()).collect())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::SeparableCosGauss { n, amplitude, gauss_width } => {
                if *n == 0 {
                    return Err(TfwError::InvalidModel("n must be >= 1".into()));
                }
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(TfwError::InvalidModel("amplitude must be >= 0".into()));
                }
                if !(gauss_width.is_finite() && *gauss_width > 0.0) {
                    return Err(TfwError::InvalidModel("gauss_width must be > 0".into()));
                }
            }
            Self::Constant(v) => {
                if !(v.is_finite() && *v >= 0.0) {
                    return Err(TfwError::InvalidModel("constant value must be >= 0".into()));
                }
            }
            Self::Tabulated(f) => {
                if !f.is_nonnegative() {
                    return Err(TfwError::InvalidModel("tabulated density is negative".into()));
                }
            }
            Self::X3Profile(v) => {
                if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(TfwError::InvalidModel("profile values must be >= 0".into()));
                }
            }
        }
        Ok(())
    }

    /// True if the density does not depend on `x1, x2`.
    pub fn is_inplane_invariant(&self) -> bool {
        match self {
            Self::SeparableCosGauss { amplitude, .. } => *amplitude == 0.0,
            Self::Constant(_) | Self::X3Profile(_) => true,
            Self::Tabulated(f) => {
                let prof = f.x3_profile();
                let n3 = prof.len();
                let scale = f.max_abs().max(f64::MIN_POSITIVE);
                f.values().iter().enumerate().all(|(i, v)| (v - prof[i % n3]).abs() <= 1e-14 * scale)
            }
        }
    }

    /// Pointwise value, for analytic kinds.
    pub fn value_at(&self, x: [f64; 3]) -> Option<f64> {
        match self {
            Self::SeparableCosGauss { n, amplitude, gauss_width } => Some(
                amplitude * (*n as f64 * PI * x[0]).cos().abs() * (-x[2] * x[2] / gauss_width).exp(),
            ),
            Self::Constant(v) => Some(*v),
            _ => None,
        }
    }

    /// Point samples on `grid`.
    pub fn sample(&self, grid: &Grid3) -> Result<RealField> {
        self.validate()?;
        match self {
            Self::SeparableCosGauss { .. } | Self::Constant(_) => {
                Ok(RealField::from_fn(grid, |x| self.value_at(x).expect("analytic")))
            }
            Self::Tabulated(f) => {
                if f.grid() == grid {
                    Ok(f.clone())
                } else if f.grid().cell() == grid.cell() {
                    spectral::resample(f, grid)
                } else {
                    Err(TfwError::UnsampleableModel("tabulated density lives on another cell".into()))
                }
            }
            Self::X3Profile(values) => {
                let line = Grid3::line(grid.cell().length_x3(), values.len())
                    .map_err(|e| TfwError::UnsampleableModel(e.to_string()))?;
                let prof = RealField::new(line.clone(), values.clone())?;
                let target = grid.x3_line()?;
                let prof = if target == line { prof } else { spectral::resample(&prof, &target)? };
                RealField::from_x3_profile(grid, prof.values())
            }
        }
    }

    /// Samples of the separable density with `|cos|` replaced by its Fourier
    /// series truncated after `harmonics` terms. Slice charges are then exact
    /// on any grid that resolves the retained modes. Other kinds fall back to
    /// [`NuclearModel::sample`].
    pub fn sample_fourier(&self, grid: &Grid3, harmonics: u32) -> Result<RealField> {
        self.validate()?;
        match self {
            Self::SeparableCosGauss { n, amplitude, gauss_width } => {
                let coeffs: Vec<f64> = (0..=harmonics).map(abs_cos_coefficient).collect();
                let n = *n as f64;
                let q = grid.cell().q_side();
                Ok(RealField::from_fn(grid, |x| {
                    // |cos(n pi x1)| has period 1/n in x1 for the unit cell
                    let y = n * x[0] / q;
                    let s: f64 = coeffs
                        .iter()
                        .enumerate()
                        .map(|(j, a)| a * (2.0 * PI * j as f64 * y).cos())
                        .sum();
                    amplitude * s * (-x[2] * x[2] / gauss_width).exp()
                }))
            }
            _ => self.sample(grid),
        }
    }

    /// `int_Gamma m` by quadrature of the point samples.
    pub fn total_charge(&self, grid: &Grid3) -> Result<f64> {
        Ok(field::integrate(&self.sample(grid)?))
    }
}

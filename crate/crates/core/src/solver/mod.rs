//! SCF solver for the 3D periodic problem and the reduced 1D problem.

pub mod eigen;
pub mod hamiltonian;
pub mod nuclear;
pub mod scf;

use crate::error::Result;
use crate::field::RealField;

pub use eigen::{lobpcg_lowest, Eigenpair};
pub use hamiltonian::{apply_hamiltonian, Hamiltonian};
pub use nuclear::NuclearModel;
pub use scf::{el_residual, energy, scf_solve, scf_solve_1d, scf_solve_field, EnergyBreakdown, ScfConfig, ScfResult};

/// Lowest eigenpair `(lambda, w)` of `-Lap + coef + phi`, with `||w|| = 1`
/// (Euclidean norm of the samples) and `sum w >= 0`.
pub fn lowest_eigenpair(
    potential_terms: (&RealField, &RealField),
    config: &ScfConfig,
    initial_guess: &RealField,
) -> Result<(f64, RealField)> {
    let (coef, phi) = potential_terms;
    coef.ensure_same_grid(initial_guess)?;
    let h = Hamiltonian::new(coef, phi)?.with_cutoff(config.mode_cutoff);
    let pair = lobpcg_lowest(&h, initial_guess.values(), config.eigensolver_tol, config.eigensolver_max_iter)?;
    Ok((pair.value, RealField::new(coef.grid().clone(), pair.vector)?))
}

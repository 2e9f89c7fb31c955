//! Fourier spectral solver for the periodic Thomas-Fermi-von Weizsaecker
//! (TFW) model of two-dimensional crystals.
//!
//! The crate covers the full pipeline used to study the homogenization
//! limit `m -> m_N(x) = m(N x1, N x2, x3)`:
//!
//! * [`cell`] and [`spectral`]: the periodized cell `Q x [-L/2, L/2]`, its
//!   uniform grids and the Fourier transforms,
//! * [`field`]: grid functions, quadrature and the energy integrands,
//! * [`coulomb`]: the periodic Poisson solver, Hartree forms and a real-space
//!   evaluation of the 2D-periodic Green function,
//! * [`solver`]: the self-consistent field iteration for the 3D and reduced
//!   1D problems,
//! * [`homogenization`]: the `N -> infinity` study with rate fits,
//! * [`config`], [`output`], [`validate`] and [`cli`]: the command-line
//!   harness.

pub mod cell;
pub mod cli;
pub mod config;
pub mod coulomb;
pub mod error;
pub mod field;
pub mod homogenization;
pub mod output;
pub mod quadrature;
pub mod solver;
pub mod spectral;
pub mod validate;

pub use cell::{Grid3, ModeIndex, UnitCell};
pub use coulomb::{
    eval_green_realspace, hartree_d1, hartree_dg, solve_poisson, validate_green_vs_spectral,
    GreenEvalConfig, NeutralField,
};
pub use error::{Result, TfwError};
pub use field::{RealField, SpectralField};
pub use homogenization::{
    average_to_1d, build_m_n, fit_rate, run_study, HomogenizationPlan, HomogenizationReport,
    ModeCutoff, RateFit,
};
pub use solver::{
    apply_hamiltonian, el_residual, lowest_eigenpair, scf_solve, scf_solve_1d, EnergyBreakdown,
    NuclearModel, ScfConfig, ScfResult,
};
pub use spectral::{forward_transform, inverse_transform, laplacian_symbol};

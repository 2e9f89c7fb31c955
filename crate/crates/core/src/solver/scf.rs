//! Self-consistent field iteration for the TFW Euler-Lagrange system
//!
//! ```text
//! -Lap u + p u^(2p-1) + Phi u = lambda u,    -Lap Phi = 4 pi (u^2 - m),    int u^2 = int m
//! ```
//!
//! Each iteration freezes `u_n` in the nonlinear terms, computes the lowest
//! eigenpair of `-Lap + p u_n^(2p-2) + Phi_n` and rescales the eigenvector to
//! the nuclear charge. The step `u_n -> u_{n+1}` goes through an Anderson
//! mixer; with `anderson_depth = 0` and `mixing = 1` it is the plain
//! fixed-point map.
//!
//! The energy is convex in `rho = u^2`, so a mixed iterate that raises it can
//! be replaced by the best point on the segment between `rho_n` and the
//! output density. With this safeguard the energy decreases monotonically.
//! The Anderson history survives a rejected step unless the depth is 1.

use std::collections::VecDeque;

use log::{debug, info};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::eigen::lobpcg_lowest;
use super::hamiltonian::Hamiltonian;
use super::nuclear::NuclearModel;
use crate::cell::Grid3;
use crate::coulomb::{self, NeutralField};
use crate::error::{Result, TfwError};
use crate::field::{self, RealField};

/// Consecutive growing steps after which the iteration is declared divergent.
pub const DIVERGENCE_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScfConfig {
    /// Stop when the Euclidean norm of `u_{n+1} - u_n` on the grid is below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Damping of the Anderson step, in `(0, 1]`.
    pub mixing: f64,
    /// Number of previous steps used by Anderson acceleration (0 disables it).
    pub anderson_depth: usize,
    pub eigensolver_tol: f64,
    pub eigensolver_max_iter: usize,
    /// Exponent `p` of the Thomas-Fermi term `int rho^p`.
    pub kinetic_exponent: f64,
    /// Constant added to the mean-field potential (gauge of `Phi`).
    pub potential_shift: f64,
    /// Restrict iterates to modes `|k_a| <= cutoff[a]` (Galerkin projection).
    pub mode_cutoff: Option<[usize; 3]>,
    /// Reject mixed iterates that raise the energy and fall back to the
    /// energy-minimizing step along `(1 - t) rho_n + t rho_out`.
    pub energy_safeguard: bool,
}

impl Default for ScfConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 200,
            mixing: 0.3,
            anderson_depth: 5,
            eigensolver_tol: 1e-10,
            eigensolver_max_iter: 2000,
            kinetic_exponent: 5.0 / 3.0,
            potential_shift: 0.0,
            mode_cutoff: None,
            energy_safeguard: true,
        }
    }
}

impl ScfConfig {
    /// Undamped fixed-point iteration without acceleration.
    pub fn plain() -> Self {
        Self { mixing: 1.0, anderson_depth: 0, energy_safeguard: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(TfwError::InvalidScfConfig(m.to_string()));
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return bad("tolerance must be > 0");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1");
        }
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return bad("mixing must lie in (0, 1]");
        }
        if !(self.eigensolver_tol.is_finite() && self.eigensolver_tol > 0.0) {
            return bad("eigensolver_tol must be > 0");
        }
        if self.eigensolver_max_iter == 0 {
            return bad("eigensolver_max_iter must be >= 1");
        }
        if !(self.kinetic_exponent.is_finite() && self.kinetic_exponent > 1.5) {
            return bad("kinetic_exponent must be > 3/2");
        }
        if !self.potential_shift.is_finite() {
            return bad("potential_shift must be finite");
        }
        Ok(())
    }
}

/// Energy terms of `E(rho) = int |grad sqrt rho|^2 + int rho^p + 1/2 D(rho - m, rho - m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub kinetic_grad: f64,
    pub kinetic_tf: f64,
    pub hartree: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(kinetic_grad: f64, kinetic_tf: f64, hartree: f64) -> Self {
        Self { kinetic_grad, kinetic_tf, hartree, total: kinetic_grad + kinetic_tf + hartree }
    }
}

#[derive(Debug, Clone)]
pub struct ScfResult {
    pub u: RealField,
    pub rho: RealField,
    /// Mean-field potential; zero mean up to `potential_shift`.
    pub phi: RealField,
    pub lambda: f64,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    /// Step norm `||u_{n+1} - u_n||` per iteration.
    pub residual_trace: Vec<f64>,
    /// `|int u_n^2 - Z| / Z` per iterate.
    pub charge_drift_trace: Vec<f64>,
    /// Sampled nuclear density.
    pub nuclear: RealField,
    pub total_charge: f64,
    pub kinetic_exponent: f64,
    pub mode_cutoff: Option<[usize; 3]>,
}

/// Energy of a state `u` against the nuclear density `m`.
pub fn energy(u: &RealField, m: &RealField, p: f64) -> Result<EnergyBreakdown> {
    let rho = u.map(|v| v * v);
    let grad = field::spectral_gradient_sq_integral(u);
    let tf = field::power_integral(&rho, p)?;
    let f = NeutralField::neutralize(&rho.sub(m)?);
    let hartree = 0.5 * coulomb::hartree_dg(&f, &f)?;
    Ok(EnergyBreakdown::new(grad, tf, hartree))
}

struct Anderson {
    depth: usize,
    beta: f64,
    xs: VecDeque<Vec<f64>>,
    fs: VecDeque<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize, beta: f64) -> Self {
        Self { depth, beta, xs: VecDeque::new(), fs: VecDeque::new() }
    }

    fn reset(&mut self) {
        self.xs.clear();
        self.fs.clear();
    }

    fn step(&mut self, x: &[f64], f: &[f64]) -> Vec<f64> {
        let beta = self.beta;
        let mut out: Vec<f64> = x.iter().zip(f).map(|(a, b)| a + beta * b).collect();
        if self.depth == 0 {
            return out;
        }
        self.xs.push_back(x.to_vec());
        self.fs.push_back(f.to_vec());
        while self.xs.len() > self.depth + 1 {
            self.xs.pop_front();
            self.fs.pop_front();
        }
        let m = self.xs.len() - 1;
        if m == 0 {
            return out;
        }
        let diff = |v: &VecDeque<Vec<f64>>, i: usize| -> Vec<f64> {
            v[i + 1].iter().zip(&v[i]).map(|(a, b)| a - b).collect()
        };
        let dx: Vec<Vec<f64>> = (0..m).map(|i| diff(&self.xs, i)).collect();
        let df: Vec<Vec<f64>> = (0..m).map(|i| diff(&self.fs, i)).collect();
        let mut gram = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for i in 0..m {
            rhs[i] = df[i].iter().zip(f).map(|(a, b)| a * b).sum();
            for j in i..m {
                let v: f64 = df[i].iter().zip(&df[j]).map(|(a, b)| a * b).sum();
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let trace = gram.trace().max(f64::MIN_POSITIVE);
        let svd = gram.svd(true, true);
        let gamma = match svd.solve(&rhs, 1e-12 * trace) {
            Ok(g) => g,
            Err(_) => return out,
        };
        for i in 0..m {
            for ((o, a), b) in out.iter_mut().zip(&dx[i]).zip(&df[i]) {
                *o -= gamma[i] * (a + beta * b);
            }
        }
        out
    }
}

fn rescale_to_charge(u: &mut [f64], charge: f64, dv: f64) {
    let s: f64 = u.iter().map(|v| v * v).sum::<f64>() * dv;
    let a = (charge / s).sqrt();
    u.iter_mut().for_each(|v| *v *= a);
}

fn mean_field(grid: &Grid3, u: &[f64], m: &RealField, shift: f64) -> RealField {
    let f = RealField::new(grid.clone(), u.iter().zip(m.values()).map(|(a, b)| a * a - b).collect())
        .expect("same grid");
    let phi = coulomb::solve_poisson(&NeutralField::neutralize(&f));
    if shift == 0.0 {
        phi
    } else {
        phi.map(|v| v + shift)
    }
}

fn hamiltonian_for(grid: &Grid3, u: &[f64], phi: &RealField, p: f64, cutoff: Option<[usize; 3]>) -> Hamiltonian {
    let potential = u.iter().zip(phi.values()).map(|(a, b)| p * a.abs().powf(2.0 * p - 2.0) + b).collect();
    Hamiltonian::from_potential(grid, potential).with_cutoff(cutoff)
}

fn energy_of(grid: &Grid3, u: &[f64], m: &RealField, p: f64) -> Result<f64> {
    Ok(energy(&RealField::new(grid.clone(), u.to_vec())?, m, p)?.total)
}

fn density_blend(u: &[f64], g: &[f64], t: f64) -> Vec<f64> {
    u.iter().zip(g).map(|(a, b)| ((1.0 - t) * a * a + t * b * b).sqrt()).collect()
}

/// Golden-section search for the energy minimizer on `t in [0, 1]`.
fn optimal_damping(
    grid: &Grid3,
    u: &[f64],
    g: &[f64],
    m: &RealField,
    p: f64,
    e0: f64,
) -> Result<(f64, f64)> {
    let e = |t: f64| energy_of(grid, &density_blend(u, g, t), m, p);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut ec, mut ed) = (e(c)?, e(d)?);
    while b - a > 1e-4 {
        if ec < ed {
            b = d;
            d = c;
            ed = ec;
            c = b - r * (b - a);
            ec = e(c)?;
        } else {
            a = c;
            c = d;
            ec = ed;
            d = a + r * (b - a);
            ed = e(d)?;
        }
    }
    let e1 = e(1.0)?;
    let (t, et) = if ec < ed { (c, ec) } else { (d, ed) };
    Ok(if e1 <= et { (1.0, e1) } else if et <= e0 { (t, et) } else { (1e-4, e(1e-4)?) })
}

/// Core SCF loop on a sampled nuclear density.
pub fn scf_solve_field(m: &RealField, config: &ScfConfig) -> Result<ScfResult> {
    config.validate()?;
    let grid = m.grid().clone();
    if !m.is_nonnegative() {
        return Err(TfwError::InvalidModel("nuclear density must be nonnegative".into()));
    }
    let charge = field::integrate(m);
    if !(charge > 0.0) {
        return Err(TfwError::InvalidModel("total nuclear charge must be > 0".into()));
    }
    let p = config.kinetic_exponent;
    let dv = grid.cell_volume();
    let cutoff = config.mode_cutoff;

    let mut u = vec![(charge / grid.cell().volume()).sqrt(); grid.len()];
    let mut eig_guess = u.clone();
    let mut mixer = Anderson::new(config.anderson_depth, config.mixing);
    let mut trace = Vec::new();
    let mut drift = vec![0.0];
    let mut growing = 0usize;
    let mut e_cur = if config.energy_safeguard { energy_of(&grid, &u, m, p)? } else { 0.0 };

    for iter in 1..=config.max_iterations {
        let phi = mean_field(&grid, &u, m, config.potential_shift);
        let h = hamiltonian_for(&grid, &u, &phi, p, cutoff);
        let pair = lobpcg_lowest(&h, &eig_guess, config.eigensolver_tol, config.eigensolver_max_iter)?;
        eig_guess = pair.vector.clone();
        let mut next = pair.vector;
        rescale_to_charge(&mut next, charge, dv);
        next.iter_mut().for_each(|v| *v = v.abs());

        let f: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let step = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        debug!("scf iter {iter}: step {step:.3e}, lambda {:.12}", pair.value);
        if let Some(prev) = trace.last() {
            growing = if step > *prev { growing + 1 } else { 0 };
        }
        trace.push(step);

        if step <= config.tolerance {
            info!("scf converged in {iter} iterations (step {step:.3e})");
            return finish(next, m, charge, config, iter, trace, drift);
        }
        if growing >= DIVERGENCE_WINDOW {
            return Err(TfwError::ScfDiverged { iterations: iter, residual: step });
        }

        let finalize = |mut v: Vec<f64>| {
            if cutoff.is_some() {
                v = h.project(&v);
            }
            v.iter_mut().for_each(|x| *x = x.abs());
            rescale_to_charge(&mut v, charge, dv);
            v
        };
        let mut mixed = finalize(mixer.step(&u, &f));
        if config.energy_safeguard {
            let e_mix = energy_of(&grid, &mixed, m, p)?;
            if e_mix <= e_cur + 1e-12 * e_cur.abs().max(1.0) {
                e_cur = e_mix;
            } else {
                // a single stored pair is too stale to recover from a rejected step
                if config.anderson_depth <= 1 {
                    mixer.reset();
                }
                let (t, _) = optimal_damping(&grid, &u, &next, m, p, e_cur)?;
                debug!("scf iter {iter}: energy safeguard, t = {t:.4}");
                mixed = finalize(density_blend(&u, &next, t));
                e_cur = energy_of(&grid, &mixed, m, p)?;
            }
        }
        let q: f64 = mixed.iter().map(|v| v * v).sum::<f64>() * dv;
        drift.push((q - charge).abs() / charge);
        u = mixed;
    }
    Err(TfwError::ScfNotConverged {
        iterations: config.max_iterations,
        residual: trace.last().copied().unwrap_or(f64::INFINITY),
    })
}

fn finish(
    u: Vec<f64>,
    m: &RealField,
    charge: f64,
    config: &ScfConfig,
    iterations: usize,
    trace: Vec<f64>,
    mut drift: Vec<f64>,
) -> Result<ScfResult> {
    let grid = m.grid().clone();
    let p = config.kinetic_exponent;
    let phi = mean_field(&grid, &u, m, config.potential_shift);
    let h = hamiltonian_for(&grid, &u, &phi, p, config.mode_cutoff);
    // Rayleigh quotient with the self-consistent operator
    let hu = h.apply(&u);
    let num: f64 = u.iter().zip(&hu).map(|(a, b)| a * b).sum();
    let den: f64 = u.iter().map(|a| a * a).sum();
    let lambda = num / den;
    let q: f64 = u.iter().map(|v| v * v).sum::<f64>() * grid.cell_volume();
    drift.push((q - charge).abs() / charge);

    let u = RealField::new(grid.clone(), u)?;
    let rho = u.map(|v| v * v);
    let energy = energy(&u, m, p)?;
    Ok(ScfResult {
        u,
        rho,
        phi,
        lambda,
        energy,
        iterations,
        residual_trace: trace,
        charge_drift_trace: drift,
        nuclear: m.clone(),
        total_charge: charge,
        kinetic_exponent: p,
        mode_cutoff: config.mode_cutoff,
    })
}

/// Ground state of the periodic 3D problem for nuclear density `m`.
pub fn scf_solve(m: &NuclearModel, grid: &Grid3, config: &ScfConfig) -> Result<ScfResult> {
    scf_solve_field(&m.sample(grid)?, config)
}

/// Ground state of the reduced 1D problem on a line grid.
pub fn scf_solve_1d(mu: &NuclearModel, grid: &Grid3, config: &ScfConfig) -> Result<ScfResult> {
    if !grid.is_line() {
        return Err(TfwError::InvalidGrid("the 1D solver needs a line grid (n1 = n2 = 1)".into()));
    }
    if !mu.is_inplane_invariant() {
        return Err(TfwError::InvalidModel("the 1D solver needs an x3 profile".into()));
    }
    scf_solve_field(&mu.sample(grid)?, config)
}

/// Relative Euler-Lagrange defect
/// `||-Lap u + p u^(2p-1) + Phi u - lambda u|| / ||u||`, with `Phi` rebuilt
/// from `rho - m` in the gauge of `result.phi`.
pub fn el_residual(result: &ScfResult, m: &NuclearModel) -> Result<f64> {
    let m = m.sample(result.u.grid())?;
    el_residual_field(result, &m)
}

pub fn el_residual_field(result: &ScfResult, m: &RealField) -> Result<f64> {
    let grid = result.u.grid();
    m.ensure_same_grid(&result.u)?;
    let shift = result.phi.mean();
    let phi = mean_field(grid, result.u.values(), m, shift);
    let p = result.kinetic_exponent;
    let u = result.u.values();
    let potential: Vec<f64> = u.iter().zip(phi.values()).map(|(a, b)| p * a.abs().powf(2.0 * p - 2.0) + b).collect();
    let h = Hamiltonian::from_potential(grid, potential).with_cutoff(result.mode_cutoff);
    let hu = h.apply(u);
    let r: f64 = hu.iter().zip(u).map(|(a, b)| (a - result.lambda * b).powi(2)).sum::<f64>().sqrt();
    let n: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok(r / n)
}

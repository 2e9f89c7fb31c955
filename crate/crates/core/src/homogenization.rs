//! The homogenization experiment `m -> m_N(x) = m(N x1, N x2, x3)`.
//!
//! For each `N` the 3D ground state `(u_N, rho_N)` and energy `I_N` are
//! computed and compared with the 1D ground state `(u_0, rho_0)` of the
//! in-plane averaged density `m_0(x3) = 1/|Q| int_Q m(., x3)`, broadcast over
//! the cell.

use std::collections::BTreeMap;

use log::info;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::cell::{Grid3, UnitCell};
use crate::error::{Result, TfwError};
use crate::field::{self, RealField};
use crate::solver::scf::{el_residual_field, scf_solve_field};
use crate::solver::{NuclearModel, ScfConfig, ScfResult};
use crate::spectral;

/// Per-axis Fourier truncation `(k1_per_n * N, k2, k3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModeCutoff {
    pub k1_per_n: usize,
    pub k2: usize,
    pub k3: usize,
}

impl ModeCutoff {
    pub const STANDARD: ModeCutoff = ModeCutoff { k1_per_n: 4, k2: 0, k3: 6 };

    pub fn for_n(&self, n: u32) -> [usize; 3] {
        [self.k1_per_n * n as usize, self.k2, self.k3]
    }
}

/// Grid used for a given `N`: `(per_n_x1 * N, n2, n3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridRule {
    pub per_n_x1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl GridRule {
    pub fn grid(&self, cell: UnitCell, n: u32) -> Result<Grid3> {
        Grid3::new(cell, self.per_n_x1 * n as usize, self.n2, self.n3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizationPlan {
    pub n_values: Vec<u32>,
    pub base_model: NuclearModel,
    pub cell: UnitCell,
    pub grid_rule: GridRule,
    /// Points of the 1D reference grid; `rho_0` is interpolated onto each 3D grid.
    pub reference_n3: usize,
    pub solver_config: ScfConfig,
    /// Lp exponents of the density error (`f64::INFINITY` for the sup norm).
    pub norms: Vec<f64>,
    /// Fourier truncation of `m_N` (and `m_0`), `None` for plain point sampling.
    pub filter: Option<ModeCutoff>,
    /// Also restrict the SCF iterates to the truncated modes.
    pub filter_iterates: bool,
    /// Solve the different `N` concurrently.
    pub parallel: bool,
}

impl Default for HomogenizationPlan {
    fn default() -> Self {
        Self::desk()
    }
}

impl HomogenizationPlan {
    /// Scaled-down study: grids `(32 N, 4, 64)`, `N = 1..4`.
    pub fn desk() -> Self {
        Self {
            n_values: vec![1, 2, 3, 4],
            base_model: NuclearModel::standard(1),
            cell: UnitCell::standard(),
            grid_rule: GridRule { per_n_x1: 32, n2: 4, n3: 64 },
            reference_n3: 64,
            solver_config: ScfConfig::default(),
            norms: vec![1.0, 2.0, f64::INFINITY],
            filter: Some(ModeCutoff::STANDARD),
            filter_iterates: false,
            parallel: true,
        }
    }

    /// Full-size study: grids `(200 N, 4, 300)`, `N = 1..5`.
    pub fn full_scale() -> Self {
        Self {
            n_values: vec![1, 2, 3, 4, 5],
            grid_rule: GridRule { per_n_x1: 200, n2: 4, n3: 300 },
            reference_n3: 300,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(TfwError::InvalidPlan("n_values must not be empty".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) || self.n_values[0] == 0 {
            return Err(TfwError::InvalidPlan("n_values must be positive and strictly increasing".into()));
        }
        if self.norms.iter().any(|p| p.is_nan() || *p < 1.0) {
            return Err(TfwError::InvalidPlan("norm exponents must be >= 1".into()));
        }
        self.base_model.validate()?;
        self.solver_config.validate()?;
        self.grid_rule.grid(self.cell, 1)?;
        Grid3::line(self.cell.length_x3(), self.reference_n3)?;
        Ok(())
    }
}

/// `m_N` sampled on `grid`.
///
/// Analytic models are sampled pointwise. A tabulated model is mapped in
/// Fourier space: mode `(k1, k2, k3)` of `m` becomes mode `(N k1, N k2, k3)`
/// of `m_N`, which must be representable on `grid`.
pub fn build_m_n(base: &NuclearModel, n: u32, grid: &Grid3) -> Result<RealField> {
    if n == 0 {
        return Err(TfwError::InvalidModel("N must be >= 1".into()));
    }
    match base {
        NuclearModel::SeparableCosGauss { n: n0, amplitude, gauss_width } => NuclearModel::SeparableCosGauss {
            n: n0 * n,
            amplitude: *amplitude,
            gauss_width: *gauss_width,
        }
        .sample(grid),
        NuclearModel::Constant(_) | NuclearModel::X3Profile(_) => base.sample(grid),
        NuclearModel::Tabulated(f) => {
            let src = f.grid();
            if src.cell() != grid.cell() {
                return Err(TfwError::UnsampleableModel("tabulated density lives on another cell".into()));
            }
            let src_x3 = src.x3_line()?;
            let dst_x3 = grid.x3_line()?;
            if src_x3 != dst_x3 {
                return Err(TfwError::UnsampleableModel("tabulated density has a different x3 grid".into()));
            }
            let coeffs = spectral::forward_raw(src, f.values());
            let mut out = vec![Complex64::default(); grid.len()];
            let scale = 1e-13 * coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (idx, c) in coeffs.iter().enumerate() {
                let k = src.mode_at(idx).0;
                let pos = src.unravel(idx);
                let nyq = (0..2).any(|a| src.is_nyquist(a, pos[a]));
                let target = crate::cell::ModeIndex([k[0] * n as i64, k[1] * n as i64, k[2]]);
                match grid.mode_flat_index(target) {
                    Some(t) if !(nyq && n > 1) => out[t] += c,
                    _ if c.norm() <= scale => {}
                    _ => {
                        return Err(TfwError::UnsampleableModel(format!(
                            "mode {k:?} of the tabulated density is not representable after scaling by {n}"
                        )))
                    }
                }
            }
            RealField::new(grid.clone(), spectral::inverse_raw(grid, &out))
        }
    }
}

/// `m_N` as used by the study: with a filter, the separable model is built
/// from the truncated `|cos|` series and every model is low-pass filtered.
pub fn build_m_n_filtered(base: &NuclearModel, n: u32, grid: &Grid3, filter: Option<ModeCutoff>) -> Result<RealField> {
    let Some(cut) = filter else {
        return build_m_n(base, n, grid);
    };
    let raw = match base {
        NuclearModel::SeparableCosGauss { n: n0, amplitude, gauss_width } => NuclearModel::SeparableCosGauss {
            n: n0 * n,
            amplitude: *amplitude,
            gauss_width: *gauss_width,
        }
        .sample_fourier(grid, (cut.k1_per_n / *n0 as usize) as u32)?,
        _ => build_m_n(base, n, grid)?,
    };
    let filtered = spectral::filter_modes(&raw, cut.for_n(n));
    // truncation ringing can dip a hair below zero
    Ok(filtered.map(|v| v.max(0.0)))
}

/// In-plane average `m_0(x3)` on the line grid sharing `grid`'s `x3` axis.
pub fn average_to_1d(m: &NuclearModel, grid: &Grid3) -> Result<RealField> {
    let f = m.sample(grid)?;
    average_field_to_1d(&f)
}

pub fn average_field_to_1d(f: &RealField) -> Result<RealField> {
    RealField::new(f.grid().x3_line()?, f.x3_profile())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(ln N, ln value)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(TfwError::DegenerateFit(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|(n, v)| !(*v > 0.0) || !(*n > 0.0)) {
        return Err(TfwError::DegenerateFit("values and N must be positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(TfwError::DegenerateFit("all N are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if ss_tot <= 1e-300 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { slope, intercept, r_squared })
}

/// Label of an Lp exponent: `L1`, `L2`, `Linf`, `L1.5`, ...
pub fn norm_label(p: f64) -> String {
    if p.is_infinite() {
        "Linf".to_string()
    } else {
        format!("L{p}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyEntry {
    pub n: u32,
    pub energy: f64,
    /// `||rho_N - rho_0||_p` keyed by [`norm_label`].
    pub errors: BTreeMap<String, f64>,
    /// `||grad u_N - grad u_0||_2`.
    pub grad_error: f64,
    /// `|I_N - I_0|`.
    pub energy_gap: f64,
    pub iterations: usize,
    pub el_residual: f64,
    /// Mean over `x3` of the in-plane variance of `rho_N`.
    pub inplane_variance: f64,
    pub max_charge_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyFailure {
    pub n: u32,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogenizationReport {
    pub per_n: Vec<StudyEntry>,
    pub i0: f64,
    pub reference_iterations: usize,
    pub reference_el_residual: f64,
    /// Fits keyed by quantity: `energy`, `err_L1`, ..., `err_grad_L2`.
    pub fitted_rates: Vec<(String, RateFit)>,
    pub failures: Vec<StudyFailure>,
}

impl HomogenizationReport {
    pub fn all_converged(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn rate(&self, quantity: &str) -> Option<RateFit> {
        self.fitted_rates.iter().find(|(q, _)| q == quantity).map(|(_, r)| *r)
    }

    pub fn series(&self, quantity: &str) -> Vec<(f64, f64)> {
        self.per_n
            .iter()
            .filter_map(|e| {
                let v = match quantity {
                    "energy" => Some(e.energy_gap),
                    "err_grad_L2" => Some(e.grad_error),
                    q => q.strip_prefix("err_").and_then(|l| e.errors.get(l).copied()),
                }?;
                Some((e.n as f64, v))
            })
            .collect()
    }
}

/// The 1D reference state of a plan.
pub fn solve_reference(plan: &HomogenizationPlan) -> Result<ScfResult> {
    let first = plan.grid_rule.grid(plan.cell, plan.n_values[0])?;
    let m1 = build_m_n_filtered(&plan.base_model, 1, &first, plan.filter)?;
    let m0 = average_field_to_1d(&m1)?;
    let line = Grid3::line(plan.cell.length_x3(), plan.reference_n3)?;
    let m0 = spectral::resample(&m0, &line)?;
    let mut cfg = plan.solver_config.clone();
    if plan.filter_iterates {
        cfg.mode_cutoff = plan.filter.map(|c| [0, 0, c.k3]);
    }
    scf_solve_field(&m0.map(|v| v.max(0.0)), &cfg)
}

fn solve_one(plan: &HomogenizationPlan, n: u32, reference: &ScfResult) -> Result<StudyEntry> {
    let grid = plan.grid_rule.grid(plan.cell, n)?;
    let m = build_m_n_filtered(&plan.base_model, n, &grid, plan.filter)?;
    let mut cfg = plan.solver_config.clone();
    if plan.filter_iterates {
        cfg.mode_cutoff = plan.filter.map(|c| c.for_n(n));
    }
    let res = scf_solve_field(&m, &cfg)?;
    let line = grid.x3_line()?;
    let rho0 = spectral::resample(&reference.rho, &line)?;
    let u0 = spectral::resample(&reference.u, &line)?;
    let rho0 = RealField::from_x3_profile(&grid, rho0.values())?;
    let u0 = RealField::from_x3_profile(&grid, u0.values())?;
    let e = res.rho.sub(&rho0)?;
    let mut errors = BTreeMap::new();
    for &p in &plan.norms {
        errors.insert(norm_label(p), field::lp_norm(&e, p)?);
    }
    let grad_error = field::spectral_gradient_sq_integral(&res.u.sub(&u0)?).sqrt();
    let el = el_residual_field(&res, &m)?;
    info!("N = {n}: I_N = {:.12}, iterations {}, residual {el:.3e}", res.energy.total, res.iterations);
    Ok(StudyEntry {
        n,
        energy: res.energy.total,
        errors,
        grad_error,
        energy_gap: (res.energy.total - reference.energy.total).abs(),
        iterations: res.iterations,
        el_residual: el,
        inplane_variance: res.rho.inplane_variance(),
        max_charge_drift: res.charge_drift_trace.iter().copied().fold(0.0, f64::max),
    })
}

/// Run the full study. Solver failures for individual `N` are recorded in
/// [`HomogenizationReport::failures`]; the successful entries are kept.
pub fn run_study(plan: &HomogenizationPlan) -> Result<HomogenizationReport> {
    plan.validate()?;
    let reference = solve_reference(plan)?;
    let reference_el = {
        let m0 = reference.nuclear.clone();
        el_residual_field(&reference, &m0)?
    };
    info!("1D reference: I_0 = {:.12}, iterations {}", reference.energy.total, reference.iterations);

    let outcomes: Vec<(u32, Result<StudyEntry>)> = if plan.parallel {
        plan.n_values.par_iter().map(|&n| (n, solve_one(plan, n, &reference))).collect()
    } else {
        plan.n_values.iter().map(|&n| (n, solve_one(plan, n, &reference))).collect()
    };
    let mut per_n = Vec::new();
    let mut failures = Vec::new();
    for (n, out) in outcomes {
        match out {
            Ok(e) => per_n.push(e),
            Err(e) => failures.push(StudyFailure { n, error: e.to_string() }),
        }
    }

    let mut report = HomogenizationReport {
        per_n,
        i0: reference.energy.total,
        reference_iterations: reference.iterations,
        reference_el_residual: reference_el,
        fitted_rates: Vec::new(),
        failures,
    };
    let mut quantities = vec!["energy".to_string()];
    quantities.extend(plan.norms.iter().map(|p| format!("err_{}", norm_label(*p))));
    quantities.push("err_grad_L2".to_string());
    for q in quantities {
        let pts = report.series(&q);
        if pts.len() >= 3 {
            if let Ok(fit) = fit_rate(&pts) {
                report.fitted_rates.push((q, fit));
            }
        }
    }
    Ok(report)
}

//! C ABI for `tfw-core`.
//!
//! Objects are opaque handles created by `tfw_*_new`-style functions and
//! released with the matching `tfw_*_free`. Every fallible call returns a
//! [`TfwStatus`]; on failure, [`tfw_last_error`] describes the problem. The
//! error message is per thread and stays valid until the next failing call on
//! that thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tfw_core::homogenization::{GridRule, HomogenizationPlan, HomogenizationReport, ModeCutoff};
use tfw_core::solver::scf::el_residual_field;
use tfw_core::{Grid3, NuclearModel, RealField, ScfConfig, ScfResult, TfwError, UnitCell};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GridMismatch = 3,
    InvalidModel = 4,
    ScfDiverged = 5,
    ScfNotConverged = 6,
    EigensolverStalled = 7,
    NumericalError = 8,
    Panic = 9,
}

fn status_of(e: &TfwError) -> TfwStatus {
    match e {
        TfwError::InvalidCell(_)
        | TfwError::InvalidGrid(_)
        | TfwError::InvalidExponent(_)
        | TfwError::InvalidGreenConfig(_)
        | TfwError::InvalidScfConfig(_)
        | TfwError::InvalidPlan(_) => TfwStatus::InvalidArgument,
        TfwError::GridMismatch => TfwStatus::GridMismatch,
        TfwError::InvalidModel(_) | TfwError::UnsampleableModel(_) | TfwError::NegativeDensity { .. } => {
            TfwStatus::InvalidModel
        }
        TfwError::ScfDiverged { .. } => TfwStatus::ScfDiverged,
        TfwError::ScfNotConverged { .. } => TfwStatus::ScfNotConverged,
        TfwError::EigensolverStalled { .. } => TfwStatus::EigensolverStalled,
        TfwError::NonHermitianInput { .. }
        | TfwError::NotNeutral { .. }
        | TfwError::SingularPoint
        | TfwError::DegenerateFit(_) => TfwStatus::NumericalError,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(e: TfwError) -> TfwStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> TfwStatus {
    set_error(format!("{what} is null"));
    TfwStatus::NullPointer
}

/// Run `f`, turning panics into [`TfwStatus::Panic`].
fn guard(f: impl FnOnce() -> TfwStatus) -> TfwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal error: {msg}"));
            TfwStatus::Panic
        }
    }
}

fn store<T>(out: *mut *mut T, value: T) -> TfwStatus {
    // SAFETY: callers check `out` for null first
    unsafe { *out = Box::into_raw(Box::new(value)) };
    TfwStatus::Ok
}

/// Message of the last failed call on this thread (empty if none).
#[no_mangle]
pub extern "C" fn tfw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tfw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Uniform grid over a cell.
pub struct TfwGrid(Grid3);

/// Nuclear density model.
pub struct TfwModel(NuclearModel);

/// Converged ground state.
pub struct TfwResult {
    result: ScfResult,
    el_residual: f64,
}

/// Homogenization study report.
pub struct TfwReport(HomogenizationReport);

/// Grid over `Q x [-L/2, L/2]` with `Q` a square of side `q_side`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tfw_grid_new(q_side: f64, length_x3: f64, n1: usize, n2: usize, n3: usize, out: *mut *mut TfwGrid) -> TfwStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match UnitCell::new(q_side, length_x3).and_then(|c| Grid3::new(c, n1, n2, n3)) {
            Ok(g) => store(out, TfwGrid(g)),
            Err(e) => fail(e),
        }
    })
}

/// Line grid (`n1 = n2 = 1`) for the reduced 1D problem.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tfw_grid_line(length_x3: f64, n3: usize, out: *mut *mut TfwGrid) -> TfwStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match Grid3::line(length_x3, n3) {
            Ok(g) => store(out, TfwGrid(g)),
            Err(e) => fail(e),
        }
    })
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a handle from `tfw_grid_new`/`tfw_grid_line`.
#[no_mangle]
pub unsafe extern "C" fn tfw_grid_len(grid: *const TfwGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// # Safety
/// `grid` must be null or a live grid handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tfw_grid_free(grid: *mut TfwGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

fn new_model(out: *mut *mut TfwModel, m: NuclearModel) -> TfwStatus {
    if out.is_null() {
        return null("out");
    }
    match m.validate() {
        Ok(()) => store(out, TfwModel(m)),
        Err(e) => fail(e),
    }
}

/// `(5 pi/2) |cos(n pi x1)| exp(-x3^2/8)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tfw_model_standard(n: u32, out: *mut *mut TfwModel) -> TfwStatus {
    guard(|| new_model(out, NuclearModel::standard(n)))
}

/// `amplitude |cos(n pi x1)| exp(-x3^2 / gauss_width)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tfw_model_separable(n: u32, amplitude: f64, gauss_width: f64, out: *mut *mut TfwModel) -> TfwStatus {
    guard(|| new_model(out, NuclearModel::SeparableCosGauss { n, amplitude, gauss_width }))
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tfw_model_constant(value: f64, out: *mut *mut TfwModel) -> TfwStatus {
    guard(|| new_model(out, NuclearModel::Constant(value)))
}

/// In-plane invariant density from `len` samples on a uniform `x3` grid.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tfw_model_x3_profile(values: *const f64, len: usize, out: *mut *mut TfwModel) -> TfwStatus {
    guard(|| {
        if values.is_null() {
            return null("values");
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        new_model(out, NuclearModel::X3Profile(v))
    })
}

/// Density tabulated on `grid` (`x3` fastest, then `x2`, then `x1`).
///
/// # Safety
/// `grid` must be a live grid handle, `values` must point to
/// `tfw_grid_len(grid)` readable doubles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tfw_model_tabulated(grid: *const TfwGrid, values: *const f64, len: usize, out: *mut *mut TfwModel) -> TfwStatus {
    guard(|| {
        let Some(g) = grid.as_ref() else { return null("grid") };
        if values.is_null() {
            return null("values");
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        match RealField::new(g.0.clone(), v) {
            Ok(f) => new_model(out, NuclearModel::Tabulated(f)),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `model` must be null or a live model handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tfw_model_free(model: *mut TfwModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// SCF parameters. Obtain defaults from [`tfw_scf_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TfwScfConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub mixing: f64,
    pub anderson_depth: usize,
    pub energy_safeguard: bool,
    pub eigensolver_tol: f64,
    pub eigensolver_max_iter: usize,
    pub kinetic_exponent: f64,
    pub potential_shift: f64,
    /// Restrict iterates to `|k_a| <= mode_cutoff[a]`.
    pub use_mode_cutoff: bool,
    pub mode_cutoff: [usize; 3],
}

impl From<&ScfConfig> for TfwScfConfig {
    fn from(c: &ScfConfig) -> Self {
        Self {
            tolerance: c.tolerance,
            max_iterations: c.max_iterations,
            mixing: c.mixing,
            anderson_depth: c.anderson_depth,
            energy_safeguard: c.energy_safeguard,
            eigensolver_tol: c.eigensolver_tol,
            eigensolver_max_iter: c.eigensolver_max_iter,
            kinetic_exponent: c.kinetic_exponent,
            potential_shift: c.potential_shift,
            use_mode_cutoff: c.mode_cutoff.is_some(),
            mode_cutoff: c.mode_cutoff.unwrap_or([0; 3]),
        }
    }
}

impl From<&TfwScfConfig> for ScfConfig {
    fn from(c: &TfwScfConfig) -> Self {
        Self {
            tolerance: c.tolerance,
            max_iterations: c.max_iterations,
            mixing: c.mixing,
            anderson_depth: c.anderson_depth,
            eigensolver_tol: c.eigensolver_tol,
            eigensolver_max_iter: c.eigensolver_max_iter,
            kinetic_exponent: c.kinetic_exponent,
            potential_shift: c.potential_shift,
            mode_cutoff: c.use_mode_cutoff.then_some(c.mode_cutoff),
            energy_safeguard: c.energy_safeguard,
        }
    }
}

#[no_mangle]
pub extern "C" fn tfw_scf_config_default() -> TfwScfConfig {
    TfwScfConfig::from(&ScfConfig::default())
}

unsafe fn solve(
    model: *const TfwModel,
    grid: *const TfwGrid,
    config: *const TfwScfConfig,
    out: *mut *mut TfwResult,
    one_d: bool,
) -> TfwStatus {
    let Some(m) = model.as_ref() else { return null("model") };
    let Some(g) = grid.as_ref() else { return null("grid") };
    if out.is_null() {
        return null("out");
    }
    let cfg = config.as_ref().map_or_else(ScfConfig::default, ScfConfig::from);
    let run = || -> tfw_core::Result<TfwResult> {
        let result = if one_d {
            tfw_core::scf_solve_1d(&m.0, &g.0, &cfg)?
        } else {
            tfw_core::scf_solve(&m.0, &g.0, &cfg)?
        };
        let el_residual = el_residual_field(&result, &result.nuclear)?;
        Ok(TfwResult { result, el_residual })
    };
    match run() {
        Ok(r) => store(out, r),
        Err(e) => fail(e),
    }
}

/// Ground state of the 3D problem. `config` may be null for defaults.
///
/// # Safety
/// Handles must be live; `config` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tfw_scf_solve(model: *const TfwModel, grid: *const TfwGrid, config: *const TfwScfConfig, out: *mut *mut TfwResult) -> TfwStatus {
    guard(|| solve(model, grid, config, out, false))
}

/// Ground state of the reduced 1D problem on a line grid.
///
/// # Safety
/// Handles must be live; `config` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tfw_scf_solve_1d(model: *const TfwModel, grid: *const TfwGrid, config: *const TfwScfConfig, out: *mut *mut TfwResult) -> TfwStatus {
    guard(|| solve(model, grid, config, out, true))
}

/// Energy terms of a ground state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TfwEnergy {
    pub kinetic_grad: f64,
    pub kinetic_tf: f64,
    pub hartree: f64,
    pub total: f64,
}

/// Scalars of a ground state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TfwSummary {
    pub energy: TfwEnergy,
    pub lambda: f64,
    pub iterations: usize,
    pub el_residual: f64,
    pub total_charge: f64,
}

/// # Safety
/// `result` must be a live result handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tfw_result_summary(result: *const TfwResult, out: *mut TfwSummary) -> TfwStatus {
    guard(|| {
        let Some(r) = result.as_ref() else { return null("result") };
        let Some(o) = out.as_mut() else { return null("out") };
        let e = &r.result.energy;
        *o = TfwSummary {
            energy: TfwEnergy { kinetic_grad: e.kinetic_grad, kinetic_tf: e.kinetic_tf, hartree: e.hartree, total: e.total },
            lambda: r.result.lambda,
            iterations: r.result.iterations,
            el_residual: r.el_residual,
            total_charge: r.result.total_charge,
        };
        TfwStatus::Ok
    })
}

/// Which grid function of a result to copy.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfwFieldKind {
    Density = 0,
    Amplitude = 1,
    Potential = 2,
}

/// Copy `rho`, `u` or `Phi` into `buf`, which must hold the grid length.
///
/// # Safety
/// `result` must be live and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tfw_result_copy_field(result: *const TfwResult, kind: TfwFieldKind, buf: *mut f64, len: usize) -> TfwStatus {
    guard(|| {
        let Some(r) = result.as_ref() else { return null("result") };
        if buf.is_null() {
            return null("buf");
        }
        let f = match kind {
            TfwFieldKind::Density => &r.result.rho,
            TfwFieldKind::Amplitude => &r.result.u,
            TfwFieldKind::Potential => &r.result.phi,
        };
        if len != f.values().len() {
            set_error(format!("buffer holds {len} values, field has {}", f.values().len()));
            return TfwStatus::InvalidArgument;
        }
        ptr::copy_nonoverlapping(f.values().as_ptr(), buf, len);
        TfwStatus::Ok
    })
}

/// # Safety
/// `result` must be null or a live result handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tfw_result_free(result: *mut TfwResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Homogenization study parameters; see [`tfw_plan_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TfwPlan {
    /// Study `N = 1..=n_max`.
    pub n_max: u32,
    pub per_n_x1: usize,
    pub n2: usize,
    pub n3: usize,
    pub q_side: f64,
    pub length_x3: f64,
    /// Apply the `(4N, 0, 6)` mode truncation to `m_N`.
    pub filter: bool,
    pub parallel: bool,
    pub scf: TfwScfConfig,
}

/// Desk-scale study: grids `(32 N, 4, 64)`, `N = 1..4`.
#[no_mangle]
pub extern "C" fn tfw_plan_default() -> TfwPlan {
    let p = HomogenizationPlan::desk();
    TfwPlan {
        n_max: 4,
        per_n_x1: p.grid_rule.per_n_x1,
        n2: p.grid_rule.n2,
        n3: p.grid_rule.n3,
        q_side: p.cell.q_side(),
        length_x3: p.cell.length_x3(),
        filter: true,
        parallel: true,
        scf: TfwScfConfig::from(&p.solver_config),
    }
}

/// Run the study for the base density `model` (rescaled to `m(N x1, N x2, x3)`
/// for each `N`). A report is produced even if some `N` fail; check
/// [`tfw_report_failures`].
///
/// # Safety
/// `model` must be live, `plan` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tfw_homogenize(model: *const TfwModel, plan: *const TfwPlan, out: *mut *mut TfwReport) -> TfwStatus {
    guard(|| {
        let Some(m) = model.as_ref() else { return null("model") };
        if out.is_null() {
            return null("out");
        }
        let p = plan.as_ref().copied().unwrap_or_else(|| tfw_plan_default());
        let cell = match UnitCell::new(p.q_side, p.length_x3) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        let plan = HomogenizationPlan {
            n_values: (1..=p.n_max).collect(),
            base_model: m.0.clone(),
            cell,
            grid_rule: GridRule { per_n_x1: p.per_n_x1, n2: p.n2, n3: p.n3 },
            reference_n3: p.n3,
            solver_config: ScfConfig::from(&p.scf),
            filter: p.filter.then_some(ModeCutoff::STANDARD),
            parallel: p.parallel,
            ..HomogenizationPlan::desk()
        };
        match tfw_core::run_study(&plan) {
            Ok(r) => store(out, TfwReport(r)),
            Err(e) => fail(e),
        }
    })
}

/// One converged `N` of a study.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TfwReportRow {
    pub n: u32,
    pub energy: f64,
    pub err_l1: f64,
    pub err_l2: f64,
    pub err_linf: f64,
    pub err_grad_l2: f64,
    pub iterations: usize,
    pub el_residual: f64,
}

/// Number of converged rows.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn tfw_report_len(report: *const TfwReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.per_n.len())
}

/// Number of `N` whose solve failed.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn tfw_report_failures(report: *const TfwReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.failures.len())
}

/// Energy `I_0` of the 1D reference, NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn tfw_report_i0(report: *const TfwReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.i0)
}

/// # Safety
/// `report` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tfw_report_row(report: *const TfwReport, index: usize, out: *mut TfwReportRow) -> TfwStatus {
    guard(|| {
        let Some(r) = report.as_ref() else { return null("report") };
        let Some(o) = out.as_mut() else { return null("out") };
        let Some(e) = r.0.per_n.get(index) else {
            set_error(format!("row {index} out of range"));
            return TfwStatus::InvalidArgument;
        };
        let err = |k: &str| e.errors.get(k).copied().unwrap_or(f64::NAN);
        *o = TfwReportRow {
            n: e.n,
            energy: e.energy,
            err_l1: err("L1"),
            err_l2: err("L2"),
            err_linf: err("Linf"),
            err_grad_l2: e.grad_error,
            iterations: e.iterations,
            el_residual: e.el_residual,
        };
        TfwStatus::Ok
    })
}

/// Log-log fit of `energy` (the gap `|I_N - I_0|`), `err_L1`, `err_L2`,
/// `err_Linf` or `err_grad_L2` against `N`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TfwRate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// # Safety
/// `report` must be live, `quantity` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tfw_report_rate(report: *const TfwReport, quantity: *const c_char, out: *mut TfwRate) -> TfwStatus {
    guard(|| {
        let Some(r) = report.as_ref() else { return null("report") };
        if quantity.is_null() {
            return null("quantity");
        }
        let Some(o) = out.as_mut() else { return null("out") };
        let q = CStr::from_ptr(quantity).to_string_lossy();
        match r.0.rate(&q) {
            Some(f) => {
                *o = TfwRate { slope: f.slope, intercept: f.intercept, r_squared: f.r_squared };
                TfwStatus::Ok
            }
            None => {
                set_error(format!("no fitted rate for `{q}`"));
                TfwStatus::InvalidArgument
            }
        }
    })
}

/// # Safety
/// `report` must be null or a live report handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tfw_report_free(report: *mut TfwReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

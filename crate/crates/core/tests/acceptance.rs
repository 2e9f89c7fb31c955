//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
//! Build with optimizations (the test profile does) or the time limits will not hold.

mod common;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::SymmetricEigen;
use rustfft::num_complex::Complex64;
use tfw_core::coulomb::GreenFunction;
use tfw_core::field::spectral_gradient_sq_integral;
use tfw_core::validate::{random_field, rng};
use tfw_core::{
    build_m_n, el_residual, forward_transform, hartree_dg, inverse_transform, laplacian_symbol, lowest_eigenpair,
    run_study, scf_solve, scf_solve_1d, solve_poisson, validate_green_vs_spectral, GreenEvalConfig, Grid3,
    HomogenizationPlan, NeutralField, NuclearModel, RealField, ScfConfig, SpectralField, UnitCell,
};

use common::{adaptive_simpson, dense_neg_laplacian, rel, TrigPoly};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn grid(n1: usize, n2: usize, n3: usize) -> Grid3 {
    Grid3::new(UnitCell::standard(), n1, n2, n3).unwrap()
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn spectral_core() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let mut slowest = Duration::ZERO;
    let mut r = rng(1);
    for dims in [[8, 4, 16], [32, 4, 64], [64, 4, 128]] {
        let g = grid(dims[0], dims[1], dims[2]);
        for _ in 0..3 {
            let t = Instant::now();
            let f = random_field(&g, &mut r);
            let c = forward_transform(&f);
            let back = inverse_transform(&c).map_err(|e| e.to_string())?;
            let trip = back.sub(&f).unwrap().max_abs() / f.max_abs();
            let mean_sq = f.values().iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
            let coef_sq: f64 = c.coeffs().iter().map(|z| z.norm_sqr()).sum();
            worst.0 = worst.0.max(trip);
            worst.1 = worst.1.max(rel(coef_sq, mean_sq));
            slowest = slowest.max(t.elapsed());
        }
    }
    check(
        worst.0 <= 1e-12 && worst.1 <= 1e-12 && slowest < Duration::from_secs(1),
        format!("round trip {:.1e}, Parseval {:.1e}, slowest {:.3}s", worst.0, worst.1, slowest.as_secs_f64()),
    )
}

/// `-Lap` applied through the Fourier symbol.
fn neg_laplacian(f: &RealField) -> RealField {
    let g = f.grid();
    let c = forward_transform(f);
    let scaled: Vec<Complex64> =
        c.coeffs().iter().enumerate().map(|(i, z)| z * laplacian_symbol(g, g.mode_at(i))).collect();
    inverse_transform(&SpectralField::new(g.clone(), scaled).unwrap()).unwrap()
}

fn poisson() -> Outcome {
    let g = grid(16, 8, 32);
    let start = Instant::now();
    let (mut res, mut ident, mut closed) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..50 {
        let poly = TrigPoly::random(g.cell().sides(), [3, 2, 5], seed);
        let f = NeutralField::new(RealField::from_fn(&g, |x| poly.eval(x))).map_err(|e| e.to_string())?;
        let phi = solve_poisson(&f);
        let four_pi_f = f.inner().scale(4.0 * PI);
        res = res.max(neg_laplacian(&phi).sub(&four_pi_f).unwrap().l2_vector_norm() / four_pi_f.l2_vector_norm());
        let d = hartree_dg(&f, &f).map_err(|e| e.to_string())?;
        ident = ident.max(rel(d, spectral_gradient_sq_integral(&phi) / (4.0 * PI)));
        closed = closed.max(rel(d, poly.hartree(g.cell().volume())));
    }
    let t = start.elapsed().as_secs_f64();
    check(
        res <= 1e-12 && ident <= 1e-10 && closed <= 1e-10 && t < 5.0,
        format!("residual {res:.1e}, gradient identity {ident:.1e}, closed form {closed:.1e}, {t:.2}s"),
    )
}

fn green() -> Outcome {
    let start = Instant::now();
    let cell = UnitCell::standard();
    let mut samples = Vec::new();
    for a in 0..5 {
        for b in 0..5 {
            for c in 0..9 {
                let x = [-0.4 + 0.2 * a as f64, -0.4 + 0.2 * b as f64, -2.0 + 0.5 * c as f64];
                if x != [0.0, 0.0, 0.0] {
                    samples.push(x);
                }
            }
        }
    }
    let max_psi = |cutoff| -> Result<f64, String> {
        let g = GreenFunction::new(&cell, GreenEvalConfig { lattice_cutoff: cutoff, quad_points: 16 })
            .map_err(|e| e.to_string())?;
        let mut m = 0.0f64;
        for x in &samples {
            m = m.max(g.psi(*x).map_err(|e| e.to_string())?.abs());
        }
        Ok(m)
    };
    let (a, b) = (max_psi(20)?, max_psi(40)?);
    let grid = grid(16, 16, 32);
    let f = NeutralField::new(RealField::from_fn(&grid, |x| (2.0 * PI * x[0]).cos() * (-x[2] * x[2]).exp()))
        .map_err(|e| e.to_string())?;
    let conv = validate_green_vs_spectral(&f, GreenEvalConfig { lattice_cutoff: 20, quad_points: 16 })
        .map_err(|e| e.to_string())?;
    let t = start.elapsed().as_secs_f64();
    check(
        a.is_finite() && b.is_finite() && rel(a, b) < 0.1 && conv <= 5e-2 && t < 60.0,
        format!("max|psi| {a:.4} -> {b:.4}, convolution {conv:.2e}, {t:.1}s"),
    )
}

fn eigensolver() -> Outcome {
    let start = Instant::now();
    let g = grid(4, 4, 8);
    let cfg = ScfConfig::default();
    let mut r = rng(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let coef = random_field(&g, &mut r).map(|v| 2.0 * (v + 1.0));
        let phi = random_field(&g, &mut r).map(|v| 5.0 * v);
        let (lambda, _) =
            lowest_eigenpair((&coef, &phi), &cfg, &RealField::constant(&g, 1.0)).map_err(|e| e.to_string())?;
        let mut a = dense_neg_laplacian(&g);
        for i in 0..g.len() {
            a[(i, i)] += coef.values()[i] + phi.values()[i];
        }
        worst = worst.max((lambda - SymmetricEigen::new(a).eigenvalues.min()).abs());
    }
    let t = start.elapsed().as_secs_f64();
    check(worst <= 1e-8 && t < 10.0, format!("max |lambda - dense| {worst:.1e} over 20 instances, {t:.2}s"))
}

fn constant_solution() -> Outcome {
    let g = grid(8, 4, 16);
    let (mut iters, mut dl, mut de) = (0, 0.0f64, 0.0f64);
    for mbar in [0.2, 1.0, 3.0] {
        let res = scf_solve(&NuclearModel::Constant(mbar), &g, &ScfConfig::default()).map_err(|e| e.to_string())?;
        iters = iters.max(res.iterations);
        dl = dl.max(rel(res.lambda, 5.0 / 3.0 * mbar.powf(2.0 / 3.0)));
        de = de.max(rel(res.energy.total, g.cell().volume() * mbar.powf(5.0 / 3.0)));
    }
    check(iters <= 3 && dl <= 1e-10 && de <= 1e-12, format!("iterations {iters}, lambda {dl:.1e}, energy {de:.1e}"))
}

fn el_residuals() -> Outcome {
    let start = Instant::now();
    let (mut el, mut drift) = (0.0f64, 0.0f64);
    for n in 1..=4u32 {
        let g = grid(32 * n as usize, 4, 64);
        let m = NuclearModel::standard(n);
        let cfg = ScfConfig { tolerance: 1e-6, ..ScfConfig::default() };
        let res = scf_solve(&m, &g, &cfg).map_err(|e| format!("N = {n}: {e}"))?;
        el = el.max(el_residual(&res, &m).map_err(|e| e.to_string())?);
        drift = drift.max(res.charge_drift_trace.iter().copied().fold(0.0, f64::max));
    }
    let t = start.elapsed().as_secs_f64();
    check(
        el <= 1e-5 && drift <= 1e-10 && t < 300.0,
        format!("max residual {el:.2e}, max drift {drift:.1e}, {t:.1}s"),
    )
}

fn dimensional_reduction() -> Outcome {
    let start = Instant::now();
    let g = grid(4, 4, 64);
    let line = g.x3_line().map_err(|e| e.to_string())?;
    let m = NuclearModel::standard_profile(&line);
    let cfg = ScfConfig { tolerance: 1e-8, ..ScfConfig::default() };
    let r3 = scf_solve(&m, &g, &cfg).map_err(|e| e.to_string())?;
    let r1 = scf_solve_1d(&m, &line, &cfg).map_err(|e| e.to_string())?;
    let broadcast = RealField::from_x3_profile(&g, r1.rho.values()).map_err(|e| e.to_string())?;
    let d = r3.rho.sub(&broadcast).unwrap().max_abs() / r1.rho.max_abs();
    let t = start.elapsed().as_secs_f64();
    check(d <= 1e-4 && t < 60.0, format!("|rho3 - rho1|_inf / max rho {d:.1e}, {t:.2}s"))
}

fn homogenization_rates() -> Outcome {
    let start = Instant::now();
    let report = run_study(&HomogenizationPlan::desk()).map_err(|e| e.to_string())?;
    if !report.all_converged() || report.per_n.len() != 4 {
        return Err(format!("study incomplete: {:?}", report.failures));
    }
    let decreasing = |v: Vec<f64>| v.windows(2).all(|w| w[1] < w[0]);
    let mut bad = Vec::new();
    for label in ["L1", "L2"] {
        if !decreasing(report.per_n.iter().map(|e| e.errors[label]).collect()) {
            bad.push(label);
        }
    }
    if !decreasing(report.per_n.iter().map(|e| e.grad_error).collect()) {
        bad.push("grad");
    }
    if !decreasing(report.per_n.iter().map(|e| (e.energy - report.i0).abs()).collect()) {
        bad.push("energy");
    }
    let slope = report.rate("energy").map(|r| r.slope).unwrap_or(f64::NAN);
    let t = start.elapsed().as_secs_f64();
    check(
        bad.is_empty() && (-2.5..=-1.0).contains(&slope) && t < 600.0,
        format!("non-decreasing {bad:?}, energy slope {slope:.3}, {t:.1}s"),
    )
}

fn slice_charges() -> Outcome {
    let mut worst = [0.0f64; 2];
    for (i, p) in [1.0, 5.0 / 3.0].into_iter().enumerate() {
        let q = adaptive_simpson(&|y| (PI * y).cos().abs().powf(p), -0.5, 0.5, 1e-13);
        for n in [1u32, 2, 4] {
            let g = grid(32 * n as usize, 4, 64);
            let m = build_m_n(&NuclearModel::standard(1), n, &g).map_err(|e| e.to_string())?.map(|v| v.powf(p));
            for (j, v) in m.x3_profile().iter().enumerate() {
                let x3 = g.coord(2, j);
                worst[i] = worst[i].max(rel(*v, (2.5 * PI * (-x3 * x3 / 8.0).exp()).powf(p) * q));
            }
        }
    }
    check(worst[0] <= 1e-3 && worst[1] <= 1e-2, format!("p = 1: {:.1e}, p = 5/3: {:.1e}", worst[0], worst[1]))
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_tfw"))
            .args(["homogenize", "--out"])
            .arg(d.path())
            .env("TFW_LOG", "off")
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("homogenize exited with {status}"));
        }
    }
    let (a, b) = (csv_files(dirs[0].path()), csv_files(dirs[1].path()));
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    check(!a.is_empty() && a == b, format!("{names:?}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("spectral core", spectral_core),
        ("poisson and hartree identity", poisson),
        ("green function", green),
        ("eigensolver vs dense", eigensolver),
        ("constant solution", constant_solution),
        ("euler-lagrange residual", el_residuals),
        ("dimensional reduction", dimensional_reduction),
        ("homogenization rates", homogenization_rates),
        ("slice charges", slice_charges),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

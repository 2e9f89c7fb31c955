mod common;

use std::f64::consts::PI;

use tfw_core::field::integrate;
use tfw_core::homogenization::{build_m_n_filtered, norm_label, GridRule};
use tfw_core::{
    average_to_1d, build_m_n, fit_rate, run_study, Grid3, HomogenizationPlan, ModeCutoff, NuclearModel, RealField,
    TfwError, UnitCell,
};

use common::{adaptive_simpson, rel};

fn grid(n1: usize, n2: usize, n3: usize) -> Grid3 {
    Grid3::new(UnitCell::standard(), n1, n2, n3).unwrap()
}

#[test]
fn m_1_is_the_model() {
    let g = grid(32, 4, 64);
    let m = NuclearModel::standard(1);
    assert_eq!(build_m_n(&m, 1, &g).unwrap(), m.sample(&g).unwrap());
    assert!(build_m_n(&m, 0, &g).is_err());
}

#[test]
fn slice_means_of_m_n_are_the_x3_profile() {
    for n in [1u32, 2, 3, 4] {
        let g = grid(32 * n as usize, 4, 64);
        let m = build_m_n(&NuclearModel::standard(1), n, &g).unwrap();
        for (j, v) in m.x3_profile().iter().enumerate() {
            let x3 = g.coord(2, j);
            let exact = 5.0 * (-x3 * x3 / 8.0).exp();
            assert!(rel(v * g.cell().area(), exact) <= 1e-3, "N = {n}, x3 = {x3}");
        }
    }
}

#[test]
fn slice_integrals_of_powers_are_independent_of_n() {
    // int_Q |cos(pi y)|^p by adaptive quadrature, times the x3 factor to the power p
    for (p, tol) in [(1.0, 1e-3), (5.0 / 3.0, 1e-2)] {
        let q = adaptive_simpson(&|y| (PI * y).cos().abs().powf(p), -0.5, 0.5, 1e-13);
        if p == 1.0 {
            assert!(rel(q, 2.0 / PI) < 1e-12);
        }
        for n in [1u32, 2, 4] {
            let g = grid(32 * n as usize, 4, 64);
            let m = build_m_n(&NuclearModel::standard(1), n, &g).unwrap().map(|v| v.powf(p));
            for (j, v) in m.x3_profile().iter().enumerate() {
                let x3 = g.coord(2, j);
                let exact = (2.5 * PI * (-x3 * x3 / 8.0).exp()).powf(p) * q;
                assert!(rel(*v, exact) <= tol, "p = {p}, N = {n}");
            }
        }
    }
}

#[test]
fn total_charge_is_the_same_for_every_n() {
    let g1 = grid(32, 4, 64);
    let line = g1.x3_line().unwrap();
    let m0 = integrate(&NuclearModel::standard_profile(&line).sample(&line).unwrap());
    for n in [1u32, 2, 3, 4] {
        let g = grid(32 * n as usize, 4, 64);
        let m = integrate(&build_m_n(&NuclearModel::standard(1), n, &g).unwrap());
        assert!(rel(m, m0) <= 1e-3, "N = {n}");
        let filtered = integrate(&build_m_n_filtered(&NuclearModel::standard(1), n, &g, Some(ModeCutoff::STANDARD)).unwrap());
        assert!(rel(filtered, m0) <= 1e-3, "N = {n}");
    }
}

#[test]
fn in_plane_averages() {
    let g = grid(16, 4, 64);
    let line = g.x3_line().unwrap();
    let inv = NuclearModel::standard_profile(&line);
    let avg = average_to_1d(&inv, &g).unwrap();
    for (a, b) in avg.values().iter().zip(inv.sample(&line).unwrap().values()) {
        assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
    }

    let avg = average_to_1d(&NuclearModel::standard(1), &grid(200, 4, 64)).unwrap();
    for (j, v) in avg.values().iter().enumerate() {
        let x3 = line.coord(2, j);
        assert!(rel(*v, 5.0 * (-x3 * x3 / 8.0).exp()) <= 1e-3);
    }

    let gauss = |x3: f64| (-x3 * x3).exp();
    let tab = RealField::from_fn(&g, |x| (2.0 * PI * x[0]).cos().powi(2) * gauss(x[2]));
    let avg = average_to_1d(&NuclearModel::Tabulated(tab), &g).unwrap();
    for (j, v) in avg.values().iter().enumerate() {
        assert!((v - 0.5 * gauss(line.coord(2, j))).abs() < 1e-14);
    }
}

#[test]
fn tabulated_m_n_rescales_modes_or_refuses() {
    let g = grid(8, 4, 16);
    let tab = RealField::from_fn(&g, |x| 2.0 + (2.0 * PI * x[0]).cos() * (-x[2] * x[2]).exp());
    let model = NuclearModel::Tabulated(tab);
    let g2 = grid(16, 4, 16);
    let m2 = build_m_n(&model, 2, &g2).unwrap();
    let expected = RealField::from_fn(&g2, |x| 2.0 + (4.0 * PI * x[0]).cos() * (-x[2] * x[2]).exp());
    assert!(m2.sub(&expected).unwrap().max_abs() < 1e-12);
    // 9 cycles do not fit on 16 points
    assert!(matches!(build_m_n(&model, 9, &g2), Err(TfwError::UnsampleableModel(_))));
    assert!(matches!(build_m_n(&model, 2, &grid(16, 4, 32)), Err(TfwError::UnsampleableModel(_))));
}

#[test]
fn rate_fits() {
    let fit = fit_rate(&[(1.0, 8.0), (2.0, 1.0), (4.0, 0.125)]).unwrap();
    assert!((fit.slope + 3.0).abs() < 1e-12);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
    let flat = fit_rate(&[(1.0, 2.0), (2.0, 2.0), (4.0, 2.0)]).unwrap();
    assert!(flat.slope.abs() < 1e-12);
    assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
    assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
    assert!(fit_rate(&[(2.0, 1.0), (2.0, 0.5), (2.0, 0.1)]).is_err());
    assert_eq!(norm_label(f64::INFINITY), "Linf");
}

fn small_plan(base: NuclearModel) -> HomogenizationPlan {
    HomogenizationPlan {
        n_values: vec![1, 2, 3],
        base_model: base,
        grid_rule: GridRule { per_n_x1: 16, n2: 2, n3: 32 },
        reference_n3: 32,
        ..HomogenizationPlan::desk()
    }
}

#[test]
fn invariant_base_gives_a_constant_sequence() {
    let line = Grid3::line(2.0 * PI, 32).unwrap();
    let plan = small_plan(NuclearModel::standard_profile(&line));
    let report = run_study(&plan).unwrap();
    assert!(report.all_converged());
    for e in &report.per_n {
        for (k, v) in &e.errors {
            assert!(*v <= 1e-4, "N = {}, {k}: {v}", e.n);
        }
        assert!(e.grad_error <= 1e-4);
        assert!(e.energy_gap <= 1e-6 * report.i0.abs());
    }
}

#[test]
fn study_is_deterministic_and_independent_of_scheduling() {
    let plan = small_plan(NuclearModel::standard(1));
    let a = run_study(&plan).unwrap();
    let b = run_study(&plan).unwrap();
    let serial = run_study(&HomogenizationPlan { parallel: false, ..plan.clone() }).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    assert_eq!(format!("{a:?}"), format!("{serial:?}"));
}

#[test]
fn desk_study_converges_monotonically() {
    let report = run_study(&HomogenizationPlan::desk()).unwrap();
    assert!(report.all_converged());
    assert_eq!(report.per_n.iter().map(|e| e.n).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    let decreasing = |v: Vec<f64>| v.windows(2).all(|w| w[1] < w[0]);
    for label in ["L1", "L2", "Linf"] {
        assert!(decreasing(report.per_n.iter().map(|e| e.errors[label]).collect()), "{label}");
    }
    assert!(decreasing(report.per_n.iter().map(|e| e.grad_error).collect()));
    assert!(decreasing(report.per_n.iter().map(|e| e.energy_gap).collect()));
    assert!(decreasing(report.per_n.iter().map(|e| e.inplane_variance).collect()));
    for e in &report.per_n {
        assert!(e.el_residual <= 1e-5);
        assert!(e.max_charge_drift <= 1e-10);
    }
    let slope = report.rate("energy").unwrap().slope;
    assert!((-2.5..=-1.0).contains(&slope), "{slope}");
}

#[test]
fn invalid_plans_are_rejected() {
    let bad = HomogenizationPlan { n_values: vec![], ..HomogenizationPlan::desk() };
    assert!(run_study(&bad).is_err());
    let bad = HomogenizationPlan { n_values: vec![0, 1], ..HomogenizationPlan::desk() };
    assert!(run_study(&bad).is_err());
}

mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use tfw_core::coulomb::GreenFunction;
use tfw_core::field::{integrate, spectral_gradient_sq_integral};
use tfw_core::validate::{random_band_limited, rng};
use tfw_core::{
    hartree_d1, hartree_dg, solve_poisson, validate_green_vs_spectral, GreenEvalConfig, Grid3, NeutralField, RealField, UnitCell,
};

use common::{d1_direct, rel, TrigPoly};

#[test]
fn poisson_closed_forms() {
    let g = Grid3::new(UnitCell::standard(), 8, 4, 16).unwrap();
    let zero = NeutralField::new(RealField::zeros(&g)).unwrap();
    assert_eq!(solve_poisson(&zero).max_abs(), 0.0);
    let f = NeutralField::new(RealField::from_fn(&g, |x| (2.0 * PI * x[0]).cos())).unwrap();
    let expected = RealField::from_fn(&g, |x| (2.0 * PI * x[0]).cos() / PI);
    assert!(solve_poisson(&f).sub(&expected).unwrap().max_abs() < 1e-14);
    let l = g.cell().length_x3();
    assert!(rel(hartree_dg(&f, &f).unwrap(), l / (2.0 * PI)) < 1e-13);
}

#[test]
fn poisson_and_hartree_match_closed_form_on_trig_polynomials() {
    let g = Grid3::new(UnitCell::standard(), 16, 8, 32).unwrap();
    let sides = g.cell().sides();
    for seed in 0..10 {
        let poly = TrigPoly::random(sides, [3, 2, 5], seed);
        let f = NeutralField::new(RealField::from_fn(&g, |x| poly.eval(x))).unwrap();
        let phi = solve_poisson(&f);
        let exact = RealField::from_fn(&g, |x| poly.potential(x));
        assert!(phi.sub(&exact).unwrap().max_abs() <= 1e-12 * exact.max_abs());
        let d = hartree_dg(&f, &f).unwrap();
        assert!(rel(d, poly.hartree(g.cell().volume())) < 1e-12);
        let grad = spectral_gradient_sq_integral(&phi) / (4.0 * PI);
        assert!(rel(d, grad) < 1e-10);
    }
}

#[test]
fn non_neutral_input_is_rejected() {
    let g = Grid3::new(UnitCell::standard(), 4, 4, 8).unwrap();
    assert!(NeutralField::new(RealField::constant(&g, 1.0)).is_err());
    let n = NeutralField::neutralize(&RealField::constant(&g, 1.0));
    assert!(integrate(n.inner()).abs() < 1e-14);
}

#[test]
fn d1_closed_form_and_kernel_quadrature() {
    let l = 2.0 * PI;
    let line = Grid3::line(l, 512).unwrap();
    let zero = NeutralField::new(RealField::zeros(&line)).unwrap();
    assert_eq!(hartree_d1(&zero, &zero).unwrap(), 0.0);

    // -Phi'' = 4 pi cos(2 pi t/L) gives Phi = (L^2/pi) cos, so D = L^3/(2 pi)
    let cosine = |t: f64| (2.0 * PI * t / l).cos();
    let f = NeutralField::new(RealField::from_fn(&line, |x| cosine(x[2]))).unwrap();
    let d = hartree_d1(&f, &f).unwrap();
    assert!(rel(d, l.powi(3) / (2.0 * PI)) < 1e-12);
    assert!(rel(d, d1_direct(&cosine, &cosine, l, 4096)) < 1e-4);
}

#[test]
fn d1_bump_pairs_against_kernel_quadrature() {
    let l = 2.0 * PI;
    let line = Grid3::line(l, 512).unwrap();
    let bump = |t: f64| (-(t / 0.15).powi(2)).exp();
    let zero_dipole = |t: f64| bump(t - 0.5) + bump(t + 0.5) - 2.0 * bump(t);
    let f = NeutralField::new(RealField::from_fn(&line, |x| zero_dipole(x[2]))).unwrap();
    let d = hartree_d1(&f, &f).unwrap();
    assert!(rel(d, d1_direct(&zero_dipole, &zero_dipole, l, 4096)) < 1e-3);

    // a true dipole differs from the open kernel by the periodization term
    let dipole = |t: f64| bump(t - 0.5) - bump(t + 0.5);
    let f = NeutralField::new(RealField::from_fn(&line, |x| dipole(x[2]))).unwrap();
    let p = integrate(&RealField::from_fn(&line, |x| x[2] * dipole(x[2])));
    let d = hartree_d1(&f, &f).unwrap();
    let direct = d1_direct(&dipole, &dipole, l, 4096) - 4.0 * PI / l * p * p;
    assert!(rel(d, direct) < 1e-3, "{d} vs {direct}");

    let g3 = Grid3::new(UnitCell::standard(), 2, 2, 8).unwrap();
    let f3 = NeutralField::new(RealField::zeros(&g3)).unwrap();
    assert!(hartree_d1(&f3, &f3).is_err());
}

/// `G(x) + (2 pi/|Q|)|x3|` from its reciprocal-lattice series; valid for `x3 != 0`.
fn green_reciprocal(q: f64, x: [f64; 3]) -> f64 {
    let mut s = -2.0 * PI / (q * q) * x[2].abs();
    let kmax = (60.0 / (2.0 * PI / q * x[2].abs())).ceil() as i64;
    for n1 in -kmax..=kmax {
        for n2 in -kmax..=kmax {
            if n1 == 0 && n2 == 0 {
                continue;
            }
            let k = [2.0 * PI * n1 as f64 / q, 2.0 * PI * n2 as f64 / q];
            let kn = (k[0] * k[0] + k[1] * k[1]).sqrt();
            s += 2.0 * PI / (q * q * kn) * (-kn * x[2].abs()).exp() * (k[0] * x[0] + k[1] * x[1]).cos();
        }
    }
    s
}

#[test]
fn green_differences_converge_to_reciprocal_series() {
    // the truncated far field contributes O(cutoff^-3)
    let cell = UnitCell::standard();
    let base = [0.1, -0.2, 0.7];
    let points = [[0.3, 0.1, 0.5], [-0.45, 0.4, 1.3], [0.0, 0.0, 2.5], [0.25, -0.25, 0.35]];
    let r0 = green_reciprocal(1.0, base);
    let err = |cutoff| {
        let g = GreenFunction::new(&cell, GreenEvalConfig { lattice_cutoff: cutoff, quad_points: 16 }).unwrap();
        let g0 = g.eval(base).unwrap();
        points
            .iter()
            .map(|x| ((g.eval(*x).unwrap() - g0) - (green_reciprocal(1.0, *x) - r0)).abs())
            .fold(0.0, f64::max)
    };
    let (e20, e40, e80) = (err(20), err(40), err(80));
    assert!(e80 < 1e-5, "{e80}");
    assert!(e20 / e40 > 6.0 && e40 / e80 > 6.0, "{e20} {e40} {e80}");
}

#[test]
fn green_symmetry_and_periodicity() {
    let cell = UnitCell::standard();
    let g = GreenFunction::new(&cell, GreenEvalConfig { lattice_cutoff: 40, quad_points: 16 }).unwrap();
    for x in [[0.1, 0.2, 0.3], [-0.4, 0.05, -1.7], [0.33, -0.21, 0.02]] {
        let v = g.eval(x).unwrap();
        assert!((v - g.eval([-x[0], -x[1], -x[2]]).unwrap()).abs() <= 1e-10);
        assert!((v - g.eval([x[0] + 1.0, x[1], x[2]]).unwrap()).abs() <= 1e-8);
        assert!((v - g.eval([x[0], x[1] - 1.0, x[2]]).unwrap()).abs() <= 1e-8);
    }
    assert!(g.eval([0.0, 0.0, 0.0]).is_err());
}

#[test]
fn psi_is_bounded_and_cutoff_stable() {
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
    let max_psi = |cutoff| {
        let g = GreenFunction::new(&cell, GreenEvalConfig { lattice_cutoff: cutoff, quad_points: 16 }).unwrap();
        samples.iter().map(|x| g.psi(*x).unwrap().abs()).fold(0.0, f64::max)
    };
    let (a, b) = (max_psi(20), max_psi(40));
    assert!(a.is_finite() && b.is_finite());
    assert!(rel(a, b) < 0.1, "{a} vs {b}");
}

#[test]
fn real_space_convolution_agrees_with_spectral_potential() {
    let grid = Grid3::new(UnitCell::standard(), 16, 16, 32).unwrap();
    let zero = NeutralField::new(RealField::zeros(&grid)).unwrap();
    assert_eq!(validate_green_vs_spectral(&zero, GreenEvalConfig::default()).unwrap(), 0.0);

    let f = NeutralField::new(RealField::from_fn(&grid, |x| (2.0 * PI * x[0]).cos() * (-x[2] * x[2]).exp())).unwrap();
    let d20 = validate_green_vs_spectral(&f, GreenEvalConfig { lattice_cutoff: 20, quad_points: 16 }).unwrap();
    let d40 = validate_green_vs_spectral(&f, GreenEvalConfig { lattice_cutoff: 40, quad_points: 16 }).unwrap();
    assert!(d20 <= 5e-2, "{d20}");
    assert!(d40 < d20, "{d40} vs {d20}");
}

fn neutral_triple() -> impl Strategy<Value = (NeutralField, NeutralField, NeutralField)> {
    (any::<u64>(), any::<u64>(), any::<u64>()).prop_map(|(a, b, c)| {
        let g = Grid3::new(UnitCell::standard(), 8, 4, 16).unwrap();
        let mk = |s| NeutralField::neutralize(&random_band_limited(&g, [2, 1, 4], &mut rng(s)));
        (mk(a), mk(b), mk(c))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hartree_is_positive((f, _, _) in neutral_triple()) {
        prop_assert!(hartree_dg(&f, &f).unwrap() >= 0.0);
    }

    #[test]
    fn hartree_is_bilinear_and_symmetric((f, g, h) in neutral_triple(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let combo = NeutralField::new(f.inner().scale(a).add(&g.inner().scale(b)).unwrap()).unwrap();
        let lhs = hartree_dg(&combo, &h).unwrap();
        let rhs = a * hartree_dg(&f, &h).unwrap() + b * hartree_dg(&g, &h).unwrap();
        let scale = (a.abs() * hartree_dg(&f, &f).unwrap().sqrt() + b.abs() * hartree_dg(&g, &g).unwrap().sqrt())
            * hartree_dg(&h, &h).unwrap().sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
        let (x, y) = (hartree_dg(&f, &g).unwrap(), hartree_dg(&g, &f).unwrap());
        prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
    }

    #[test]
    fn potential_constant_drops_out_of_the_pairing((f, g, _) in neutral_triple(), c in -100.0..100.0f64) {
        let phi = solve_poisson(&f);
        let pairing = integrate(&phi.zip_with(g.inner(), |a, b| a * b).unwrap());
        let shifted = integrate(&phi.map(|v| v + c).zip_with(g.inner(), |a, b| a * b).unwrap());
        let d = hartree_dg(&f, &g).unwrap();
        let scale = phi.max_abs() * tfw_core::field::lp_norm(g.inner(), 1.0).unwrap() + c.abs() * 1e-3;
        prop_assert!((pairing - d).abs() <= 1e-12 * scale);
        prop_assert!((shifted - d).abs() <= 1e-12 * (scale + c.abs() * tfw_core::field::lp_norm(g.inner(), 1.0).unwrap()));
    }

    #[test]
    fn hartree_is_continuous((f, g, _) in neutral_triple(), eps in 1e-6..1e-3f64) {
        let pert = NeutralField::new(f.inner().add(&g.inner().scale(eps)).unwrap()).unwrap();
        let (d0, d1) = (hartree_dg(&f, &f).unwrap(), hartree_dg(&pert, &pert).unwrap());
        prop_assert!(d0.is_finite() && d1.is_finite());
        let bound = 2.0 * eps * (d0 * hartree_dg(&g, &g).unwrap()).sqrt() + eps * eps * hartree_dg(&g, &g).unwrap();
        prop_assert!((d1 - d0).abs() <= bound * (1.0 + 1e-9) + 1e-14 * d0);
    }
}

mod common;

use common::c;
use holocalc::contour::{Contour, ContourOptions};
use holocalc::funcalc::{apply_funcalc, default_contour};
use holocalc::holofun::HoloFun;
use holocalc::instances::{random_calibration, random_diagonalizable, InstanceOptions};
use holocalc::linalg::max_abs;
use holocalc::spectral::{eigenvalues, resolvent_direct};
use num_complex::Complex64;
use proptest::prelude::*;

const TOL: f64 = 1e-11;

fn opts() -> InstanceOptions {
    InstanceOptions { spread: 1.5, gap: 0.2, skew: 0.25 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn product_maps_to_product(seed in 0u64..10_000, n in 2usize..6, a_re in 2.5f64..4.0) {
        let inst = random_diagonalizable(n, seed, opts());
        let p = random_calibration(n, 2, seed);
        let f = HoloFun::exp();
        let g = HoloFun::pole(c(a_re));
        let fg = HoloFun::product(f.clone(), g.clone());
        let gamma = default_contour(&inst.t, &fg, ContourOptions::default()).unwrap();
        let ff = apply_funcalc(&p, &inst.t, &f, &gamma, TOL).unwrap();
        let gg = apply_funcalc(&p, &inst.t, &g, &gamma, TOL).unwrap();
        let ffgg = apply_funcalc(&p, &inst.t, &fg, &gamma, TOL).unwrap();
        let prod = ff.operator.matrix() * gg.operator.matrix();
        prop_assert!(max_abs(&(ffgg.operator.matrix() - &prod)) <= 1e-9);
        let oracle = inst.apply(|z| z.exp() / (z - c(a_re)));
        prop_assert!(max_abs(&(ffgg.operator.matrix() - oracle)) <= 1e-9);
    }

    #[test]
    fn contour_choice_does_not_matter(seed in 0u64..10_000, n in 2usize..6, grow in 0.5f64..3.0) {
        let inst = random_diagonalizable(n, seed, opts());
        let p = random_calibration(n, 2, seed);
        let f = HoloFun::exp();
        let near = default_contour(&inst.t, &f, ContourOptions::default()).unwrap();
        let far = Contour::circle(c(0.0), inst.radius() + grow, 64).unwrap();
        let a = apply_funcalc(&p, &inst.t, &f, &near, TOL).unwrap();
        let b = apply_funcalc(&p, &inst.t, &f, &far, TOL).unwrap();
        prop_assert!(p.defect_norm(&(a.operator.matrix() - b.operator.matrix())) <= 1e-8);
    }

    #[test]
    fn radius_of_image_is_max_of_image(seed in 0u64..10_000, n in 2usize..6) {
        let inst = random_diagonalizable(n, seed, opts());
        let p = random_calibration(n, 2, seed);
        let f = HoloFun::rational(vec![c(1.0), c(0.5)], vec![c(3.0), c(-1.0)]).unwrap();
        let gamma = default_contour(&inst.t, &f, ContourOptions::default()).unwrap();
        let ft = apply_funcalc(&p, &inst.t, &f, &gamma, TOL).unwrap();
        let want = inst.eigenvalues.iter().map(|&z| f.eval(z).unwrap().norm()).fold(0.0, f64::max);
        let got = eigenvalues(&ft.operator).unwrap().radius;
        prop_assert!((got - want).abs() <= 1e-8 * want.max(1.0));
    }

    #[test]
    fn continuity_bound(seed in 0u64..10_000, n in 2usize..5, eps in 1e-4f64..1e-2) {
        let inst = random_diagonalizable(n, seed, opts());
        let p = random_calibration(n, 2, seed);
        let f = HoloFun::exp();
        let g = HoloFun::Exp(c(1.0 + eps));
        let gamma = Contour::circle(c(0.0), inst.radius() + 0.5, 64).unwrap();
        let ff = apply_funcalc(&p, &inst.t, &f, &gamma, TOL).unwrap();
        let gg = apply_funcalc(&p, &inst.t, &g, &gamma, TOL).unwrap();
        let k = &gamma.circles()[0];
        let mut sup_diff: f64 = 0.0;
        let mut sup_res: f64 = 0.0;
        for j in 0..512 {
            let z = k.point(std::f64::consts::TAU * j as f64 / 512.0);
            sup_diff = sup_diff.max((f.eval(z).unwrap() - g.eval(z).unwrap()).norm());
            let r = resolvent_direct(&inst.t, z).unwrap();
            sup_res = sup_res.max(p.operator_norm(&r).unwrap().finite().unwrap());
        }
        let bound = gamma.length() / std::f64::consts::TAU * sup_res * sup_diff;
        let diff = p.operator_norm(&holocalc::calib::Operator::new(ff.operator.matrix() - gg.operator.matrix()).unwrap())
            .unwrap()
            .finite()
            .unwrap();
        prop_assert!(diff <= bound * 1.01 + 4.0 * TOL, "{diff:e} > {bound:e}");
    }
}

#[test]
fn exp_of_diagonal() {
    let t = holocalc::calib::Operator::real_diagonal(&[0.0, 1.0]).unwrap();
    let p = holocalc::calib::Calibration::max_norm(2);
    let gamma = default_contour(&t, &HoloFun::exp(), ContourOptions::default()).unwrap();
    let r = apply_funcalc(&p, &t, &HoloFun::exp(), &gamma, 1e-12).unwrap();
    assert!((r.operator[(1, 1)] - Complex64::new(1f64.exp(), 0.0)).norm() < 1e-11);
    assert!((r.operator[(0, 0)] - c(1.0)).norm() < 1e-11);
    assert!(r.operator[(0, 1)].norm() < 1e-12);
}

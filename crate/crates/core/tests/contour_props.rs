mod common;

use holocalc::calib::Operator;
use holocalc::contour::{build_cauchy_contour, Contour, Domain};
use holocalc::funcalc::ResolventQuadrature;
use holocalc::instances::{random_diagonalizable, InstanceOptions};
use holocalc::linalg::max_abs;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn points(seed: u64, count: usize) -> Vec<Complex64> {
    let mut r = common::rng(seed);
    (0..count).map(|_| Complex64::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn contour_separates_k_from_excluded(seed in 0u64..10_000, nk in 1usize..6, ne in 0usize..4) {
        let pts = points(seed, nk + ne);
        let (k, excluded) = pts.split_at(nk);
        // skip draws where an excluded point sits on top of K
        let min_gap = k.iter().flat_map(|a| excluded.iter().map(move |b| (a - b).norm())).fold(f64::INFINITY, f64::min);
        prop_assume!(min_gap > 0.05);
        let d = Domain::around(k, 2.0);
        let gamma = build_cauchy_contour(k, excluded, &d).unwrap();
        for &z in k {
            prop_assert_eq!(gamma.winding_number(z).unwrap(), 1);
        }
        for &z in excluded {
            prop_assert_eq!(gamma.winding_number(z).unwrap(), 0);
        }
        for node in gamma.quadrature_nodes() {
            prop_assert!(d.contains(node.lambda));
        }
        let sep = k.iter().chain(excluded).map(|&z| gamma.distance(z)).fold(f64::INFINITY, f64::min);
        prop_assert!(sep >= gamma.separation() * (1.0 - 1e-12));
    }

    #[test]
    fn doubling_squares_the_error(a_re in -0.5f64..0.5, a_im in -0.5f64..0.5) {
        // ∮ dλ/(λ−a) on the unit circle = 2πi, trapezoid error ~ |a|^N
        let a = Complex64::new(a_re, a_im);
        prop_assume!(a.norm() > 0.2);
        let one = Operator::new(holocalc::linalg::CMatrix::from_element(1, 1, a)).unwrap();
        let err = |nodes: usize| {
            let q = ResolventQuadrature::new(&one, &Contour::circle(Complex64::new(0.0, 0.0), 1.0, nodes).unwrap()).unwrap();
            let v = q.integrate(|_| Ok(Complex64::new(1.0, 0.0))).unwrap();
            (v[(0, 0)] - 1.0).norm()
        };
        let (e1, e2) = (err(8), err(16));
        prop_assert!(e1 > 0.0);
        prop_assert!(e2 <= 10.0 * e1 * e1, "{e1:e} -> {e2:e}");
    }
}

#[test]
fn resolvent_integral_reproduces_identity() {
    let inst = random_diagonalizable(5, 3, InstanceOptions::default());
    let d = Domain::disk(Complex64::new(0.0, 0.0), inst.radius() + 1.0).unwrap();
    let gamma = build_cauchy_contour(&inst.eigenvalues, &[], &d).unwrap();
    let q = ResolventQuadrature::new(&inst.t, &gamma).unwrap();
    let id = q.integrate(|_| Ok(Complex64::new(1.0, 0.0))).unwrap();
    assert!(max_abs(&(id - holocalc::linalg::identity(5))) < 1e-10);
}

mod common;

use common::{c, random_matrix};
use holocalc::calib::Operator;
use holocalc::instances::{random_calibration, random_diagonalizable, random_normal, InstanceOptions};
use holocalc::linalg::{c64, max_abs};
use holocalc::renorm::lb_radius;
use holocalc::spectral::{
    eigenvalues, neumann_divergence, neumann_resolvent, resolvent_direct, spectral_radius,
};
use holocalc::calib::Calibration;
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn radius_is_homogeneous(seed in 0u64..10_000, n in 2usize..6, alpha in 0.1f64..4.0) {
        let p = random_calibration(n, 2, seed);
        let t = Operator::new(random_matrix(n, seed)).unwrap();
        let at = Operator::new(t.matrix() * c(alpha)).unwrap();
        let r = spectral_radius(&p, &t, 40).unwrap();
        let ra = spectral_radius(&p, &at, 40).unwrap();
        prop_assert!((ra.inf_over_n - alpha * r.inf_over_n).abs() <= 1e-10 * ra.inf_over_n.max(1e-300));
        prop_assert!((ra.eigen_oracle - alpha * r.eigen_oracle).abs() <= 1e-10 * ra.eigen_oracle.max(1.0));
    }

    #[test]
    fn radius_of_powers(seed in 0u64..10_000, n in 2usize..6, k in 2u32..4) {
        let inst = random_diagonalizable(n, seed, InstanceOptions::default());
        let tk = Operator::new(inst.t.matrix().pow(k)).unwrap();
        let rho = eigenvalues(&inst.t).unwrap().radius;
        let rho_k = eigenvalues(&tk).unwrap().radius;
        prop_assert!((rho_k - rho.powi(k as i32)).abs() <= 1e-9 * rho_k.max(1.0));
    }

    #[test]
    fn certified_radius_bounds_the_spectrum(seed in 0u64..10_000, n in 2usize..7) {
        let p = random_calibration(n, 3, seed);
        let t = Operator::new(random_matrix(n, seed)).unwrap();
        let est = spectral_radius(&p, &t, 60).unwrap();
        prop_assert!(est.inf_over_n >= est.eigen_oracle * (1.0 - 1e-12));
        let lb = lb_radius(&p, &t, 60).unwrap();
        prop_assert!(lb.value >= est.eigen_oracle * (1.0 - 1e-12));
    }

    #[test]
    fn normal_radius_is_tight(seed in 0u64..10_000, n in 2usize..7) {
        let inst = random_normal(n, seed, 2.0);
        let est = spectral_radius(&Calibration::max_norm(n), &inst.t, 60).unwrap();
        prop_assert!(est.inf_over_n <= 1.02 * inst.radius(), "{} vs {}", est.inf_over_n, inst.radius());
    }

    #[test]
    fn neumann_matches_direct_outside(seed in 0u64..10_000, n in 2usize..6, theta in 0.0f64..std::f64::consts::TAU, scale in 1.1f64..3.0) {
        let p = random_calibration(n, 2, seed);
        let inst = random_diagonalizable(n, seed, InstanceOptions::default());
        let r = spectral_radius(&p, &inst.t, 60).unwrap().certified();
        let lambda = Complex64::from_polar(scale * r, theta);
        let neu = neumann_resolvent(&p, &inst.t, lambda, 1e-11).unwrap();
        let direct = resolvent_direct(&inst.t, lambda).unwrap();
        prop_assert!(max_abs(&(neu.operator.matrix() - direct.matrix())) <= 1e-9);
    }

    #[test]
    fn neumann_diverges_inside(seed in 0u64..10_000, n in 2usize..6, frac in 0.3f64..0.9) {
        let p = random_calibration(n, 2, seed);
        let inst = random_diagonalizable(n, seed, InstanceOptions::default());
        let lambda = c(frac * inst.radius());
        prop_assert!(neumann_divergence(&p, &inst.t, lambda, 2000, 1e3).unwrap().is_some());
    }
}

#[test]
fn nilpotent_radius_is_zero() {
    let t = Operator::jordan(c(0.0), 4).unwrap();
    let est = spectral_radius(&Calibration::max_norm(4), &t, 10).unwrap();
    assert_eq!(est.inf_over_n, 0.0);
    let neu = neumann_resolvent(&Calibration::max_norm(4), &t, c64(0.0, 0.5), 1e-12).unwrap();
    assert_eq!(neu.terms_used, 4);
}

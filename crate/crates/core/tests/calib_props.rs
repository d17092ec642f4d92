mod common;

use common::{c, kernel_pair, random_matrix, rng};
use holocalc::calib::{
    mixed_seminorm, phat, q_equivalence, sample_vectors, Calibration, MixedSeminormValue, Operator, Seminorm,
};
use holocalc::instances::random_calibration;
use holocalc::linalg::CVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn weights(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(0.25..3.0)).collect()
}

/// Brute-force `sup q(Tx)` over a phase grid on the boundary `p(x) = 1`, the
/// same over radii inside the ball, and the smallest admissible `M`.
fn grid_sups(p: &[f64], q: &[f64], t: &Operator, steps: usize) -> (f64, f64, f64) {
    let n = p.len();
    let qs = Seminorm::weighted(q.to_vec()).unwrap();
    let ps = Seminorm::weighted(p.to_vec()).unwrap();
    let mut on_sphere: f64 = 0.0;
    let mut in_ball: f64 = 0.0;
    let mut inf_m: f64 = 0.0;
    let total = steps.pow((n - 1) as u32);
    for code in 0..total {
        let mut k = code;
        let mut x = CVector::zeros(n);
        x[0] = c(1.0 / p[0]);
        for j in 1..n {
            let theta = std::f64::consts::TAU * (k % steps) as f64 / steps as f64;
            k /= steps;
            x[j] = Complex64::from_polar(1.0 / p[j], theta);
        }
        let v = qs.eval(&(t.matrix() * &x)).unwrap();
        on_sphere = on_sphere.max(v);
        for s in [0.25, 0.5, 1.0] {
            let y = &x * c(s);
            in_ball = in_ball.max(qs.eval(&(t.matrix() * &y)).unwrap());
        }
        inf_m = inf_m.max(v / ps.eval(&x).unwrap());
    }
    (on_sphere, in_ball, inf_m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn three_formulas_agree_with_closed_form(seed in 0u64..10_000, three in any::<bool>()) {
        let n = if three { 3 } else { 2 };
        let t = Operator::new(random_matrix(n, seed)).unwrap();
        let (p, q) = (weights(n, seed + 1), weights(n, seed + 2));
        let closed = mixed_seminorm(
            &Seminorm::weighted(p.clone()).unwrap(),
            &Seminorm::weighted(q.clone()).unwrap(),
            &t,
        ).unwrap().finite().unwrap();
        let steps = if three { 90 } else { 720 };
        let (sphere, ball, inf_m) = grid_sups(&p, &q, &t, steps);
        for v in [sphere, ball, inf_m] {
            prop_assert!(v <= closed * (1.0 + 1e-12));
            prop_assert!(v >= 0.99 * closed, "grid {v} vs closed form {closed}");
        }
    }

    #[test]
    fn submultiplicative(seed in 0u64..10_000, n in 2usize..6) {
        let (p, s) = kernel_pair(n, seed);
        let (_, t) = kernel_pair(n, seed + 9_999);
        let st = Operator::new(s.matrix() * t.matrix()).unwrap();
        for m in p.members() {
            let a = phat(m, &s).unwrap().finite().unwrap();
            let b = phat(m, &t).unwrap().finite().unwrap();
            let ab = phat(m, &st).unwrap().finite().unwrap();
            prop_assert!(ab <= a * b * (1.0 + 1e-12));
        }
    }

    #[test]
    fn universally_bounded_is_quotient_bounded(seed in 0u64..10_000, n in 2usize..6) {
        let (p, t) = kernel_pair(n, seed);
        let ub = p.is_universally_bounded(&t).unwrap();
        if ub.bounded {
            prop_assert!(p.is_quotient_bounded(&t).unwrap());
        }
        let q = random_calibration(n, 3, seed);
        prop_assert!(q.is_universally_bounded(&t).unwrap().bounded);
        prop_assert!(q.is_quotient_bounded(&t).unwrap());
    }

    #[test]
    fn operator_norm_is_attained(seed in 0u64..10_000, n in 2usize..6) {
        let p = random_calibration(n, 3, seed);
        let t = Operator::new(random_matrix(n, seed)).unwrap();
        let norm = p.operator_norm(&t).unwrap().finite().unwrap();
        // the phase-aligned vertex of the maximising row attains the sup
        let mut best: f64 = 0.0;
        for m in p.members() {
            let w = m.weights().unwrap();
            let g = m.functional_rows() * t.matrix();
            for r in 0..g.nrows() {
                let x = CVector::from_fn(n, |j, _| {
                    let z = g[(r, j)];
                    let phase = if z.norm() > 0.0 { z.conj() / z.norm() } else { c(1.0) };
                    phase / w[j]
                });
                best = best.max(m.eval(&(t.matrix() * &x)).unwrap() / m.eval(&x).unwrap());
            }
        }
        prop_assert!((best - norm).abs() <= 1e-12 * norm);
        for x in sample_vectors(n, 200, seed) {
            for m in p.members() {
                prop_assert!(m.eval(&(t.matrix() * &x)).unwrap() <= norm * m.eval(&x).unwrap() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn principal_closure_is_equivalent_on_samples(seed in 0u64..10_000, n in 2usize..5) {
        let mut r = rng(seed);
        let members: Vec<Seminorm> = (0..3)
            .map(|_| Seminorm::weighted((0..n).map(|_| if r.random_bool(0.3) { 0.0 } else { r.random_range(0.5..2.0) }).collect()).unwrap())
            .collect();
        let Ok(p) = Calibration::new(members) else { return Ok(()) };
        let closure = p.principal_closure().unwrap();
        let xs = sample_vectors(n, 300, seed);
        // closure members are pointwise maxima, so never exceed the family max
        for q in closure.members() {
            for x in &xs {
                let pmax = p.members().iter().map(|m| m.eval(x).unwrap()).fold(0.0, f64::max);
                prop_assert!(q.eval(x).unwrap() <= pmax * (1.0 + 1e-12));
            }
        }
        // and every original member appears in the closure
        let eq = q_equivalence(&p, &closure).unwrap();
        prop_assert!(eq.forward.iter().all(Option::is_some));
    }
}

#[test]
fn kernel_breaks_quotient_boundedness() {
    let p = Calibration::from_weights(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
    let t = Operator::new(holocalc::linalg::CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)])).unwrap();
    assert_eq!(phat(&p.members()[0], &t).unwrap(), MixedSeminormValue::Infinite);
    assert!(!p.is_quotient_bounded(&t).unwrap());
    assert_eq!(p.first_unbounded_member(&t).unwrap(), Some(0));
}

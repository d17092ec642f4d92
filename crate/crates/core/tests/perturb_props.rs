mod common;

use common::{c, rng};
use holocalc::calib::{Calibration, Operator};
use holocalc::contour::Domain;
use holocalc::holofun::HoloFun;
use holocalc::instances::{random_calibration, random_diagonalizable, InstanceOptions};
use holocalc::linalg::{max_abs, CMatrix};
use holocalc::perturb::perturbation_series;
use holocalc::spectral::spectral_radius;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

const TOL: f64 = 1e-10;

/// `T` diagonal with two repeated eigenvalues and `S` strictly upper
/// triangular inside each block, so `TS = ST` and `Sᵏ = 0` for `k ≥ block`.
fn block_pair(seed: u64, b1: usize, b2: usize) -> (Operator, Operator, usize) {
    let mut r = rng(seed);
    let n = b1 + b2;
    let l1 = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
    let l2 = l1 + Complex64::from_polar(1.0, r.random_range(0.0..std::f64::consts::TAU));
    let mut t = CMatrix::zeros(n, n);
    let mut s = CMatrix::zeros(n, n);
    for i in 0..n {
        t[(i, i)] = if i < b1 { l1 } else { l2 };
    }
    for (lo, hi) in [(0, b1), (b1, n)] {
        for i in lo..hi {
            for j in (i + 1)..hi {
                s[(i, j)] = c(r.random_range(-0.5..0.5));
            }
        }
    }
    (Operator::new(t).unwrap(), Operator::new(s).unwrap(), b1.max(b2))
}

fn exp_of(m: &CMatrix) -> CMatrix {
    // scaling and squaring against a long Taylor sum
    let scaled = m / c(1024.0);
    let mut term = CMatrix::identity(m.nrows(), m.ncols());
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / c(k as f64);
        sum += &term;
    }
    for _ in 0..10 {
        sum = &sum * &sum;
    }
    sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nilpotent_perturbation_is_a_finite_sum(seed in 0u64..10_000, b1 in 1usize..4, b2 in 1usize..4) {
        let (t, s, index) = block_pair(seed, b1, b2);
        let p = Calibration::max_norm(t.dim());
        let d = Domain::disk(c(0.0), 5.0).unwrap();
        let res = perturbation_series(&p, &t, &s, &HoloFun::exp(), &d, TOL).unwrap();
        let s_index = (1..=index).find(|&k| max_abs(&s.matrix().pow(k as u32)) == 0.0).unwrap();
        prop_assert_eq!(res.terms_used, s_index);
        let oracle = exp_of(&(t.matrix() + s.matrix()));
        prop_assert!(max_abs(&(res.value.matrix() - oracle)) <= 10.0 * TOL * max_abs(res.value.matrix()).max(1.0));
    }

    #[test]
    fn terms_decay_geometrically(seed in 0u64..10_000, n in 2usize..6, frac in 0.2f64..0.6) {
        let inst = random_diagonalizable(n, seed, InstanceOptions { spread: 1.5, gap: 0.2, skew: 0.25 });
        let p = random_calibration(n, 2, seed);
        let rho = inst.radius();
        let d = Domain::disk(c(0.0), rho + 1.0).unwrap();
        let dist = inst.eigenvalues.iter().map(|&z| d.complement_distance(z)).fold(f64::INFINITY, f64::min);
        let base = inst.t.matrix() * c(0.5) + CMatrix::identity(n, n) * c(0.2);
        let base_op = Operator::new(base.clone()).unwrap();
        let r_base = spectral_radius(&p, &base_op, 60).unwrap().certified();
        let s = Operator::new(base * c(frac * dist / r_base)).unwrap();
        let f = HoloFun::pole(c(rho + 1.5));
        let res = perturbation_series(&p, &inst.t, &s, &f, &d, TOL).unwrap();
        let q = 1.1 * res.radius_s / res.distance;
        prop_assert!(q < 1.0);
        // slope over the second half of the computed terms
        let k = res.term_norms.len();
        prop_assume!(k >= 8 && res.term_norms[k - 1] > 0.0);
        let h = k / 2;
        let slope = ((res.term_norms[k - 1] / res.term_norms[h]).ln() / (k - 1 - h) as f64).exp();
        prop_assert!(slope <= q, "slope {slope} vs {q}");
        prop_assert!(res.direct_deviation <= 10.0 * TOL * max_abs(res.value.matrix()).max(1.0));
    }

    #[test]
    fn expanding_back_recovers_f_of_t(seed in 0u64..10_000, n in 2usize..6) {
        let inst = random_diagonalizable(n, seed, InstanceOptions { spread: 1.0, gap: 0.2, skew: 0.25 });
        let p = random_calibration(n, 2, seed);
        let s = Operator::new(inst.t.matrix() * c(0.1)).unwrap();
        let ts = Operator::new(inst.t.matrix() + s.matrix()).unwrap();
        let minus = Operator::new(-s.matrix()).unwrap();
        let d = Domain::disk(c(0.0), inst.radius() * 1.1 + 1.0).unwrap();
        let forward = perturbation_series(&p, &inst.t, &s, &HoloFun::exp(), &d, TOL).unwrap();
        let back = perturbation_series(&p, &ts, &minus, &HoloFun::exp(), &d, TOL).unwrap();
        let ft = inst.apply(|z| z.exp());
        prop_assert!(max_abs(&(back.value.matrix() - &ft)) <= 1e-8 * max_abs(&ft).max(1.0));
        prop_assert!(max_abs(&(forward.value.matrix() - inst.apply(|z| (1.1 * z).exp()))) <= 1e-8 * max_abs(&ft).max(1.0));
    }
}
